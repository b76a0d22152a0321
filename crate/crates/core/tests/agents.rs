use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regretlab::agents::{replay_boundaries, run_agent, AgentKind, AgentSpec, EpisodeSignal, SmoothedPsrl};
use regretlab::belief::{Belief, ConjugateBelief, FiniteSupportBelief};
use regretlab::mdp::{chain, two_point_bandit, Model};
use std::sync::Arc;

fn bandit_prior() -> Belief {
    let atoms = vec![Arc::new(two_point_bandit(0.0).unwrap()), Arc::new(two_point_bandit(1.0).unwrap())];
    Belief::FiniteSupport(FiniteSupportBelief::new(atoms, vec![0.5, 0.5]).unwrap())
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    (ChaCha8Rng::seed_from_u64(seed), ChaCha8Rng::seed_from_u64(seed ^ 0xabc))
}

fn lazy(signal: EpisodeSignal) -> AgentSpec {
    AgentSpec { signal: Some(signal), ..AgentSpec::kind(AgentKind::LazyPsrl) }
}

#[test]
fn boundaries_replay_from_the_trajectory() {
    let model = Model::Continuing(chain(3, 0.005, 1.0).unwrap());
    let belief = Belief::Conjugate(ConjugateBelief::uniform(3, 2).unwrap());
    for spec in [
        lazy(EpisodeSignal::VisitCountDoubling),
        lazy(EpisodeSignal::RewardThreshold { threshold: 2.0, h_max: 40 }),
        AgentSpec::kind(AgentKind::Ofu),
        AgentSpec { h: Some(7), ..AgentSpec::kind(AgentKind::Psrl) },
    ] {
        let mut agent = spec.build(belief.clone()).unwrap();
        let (mut env, mut ag) = rngs(3);
        let out = run_agent(agent.as_mut(), &model, 0, 800, &mut env, &mut ag).unwrap();
        out.trajectory.validate().unwrap();
        let replayed = replay_boundaries(&out.trajectory, &agent.signal(), 3, 2);
        assert_eq!(replayed, out.trajectory.episode_starts, "{:?}", spec.agent);
        assert_eq!(out.episodes.iter().map(|e| e.length).sum::<usize>(), 800);
    }
}

#[test]
fn threshold_episode_lengths_depend_on_the_draw() {
    let signal = EpisodeSignal::RewardThreshold { threshold: 1.0, h_max: 1000 };
    let mut lengths = BTreeMap::new();
    for r in [0.0, 1.0] {
        let model = Model::Continuing(two_point_bandit(r).unwrap());
        let mut agent = lazy(signal).build(bandit_prior()).unwrap();
        let (mut env, mut ag) = rngs(1);
        let out = run_agent(agent.as_mut(), &model, 0, 1000, &mut env, &mut ag).unwrap();
        lengths.insert(r as u8, out.episodes[0].length);
    }
    assert_eq!(lengths[&0], 1000);
    assert_eq!(lengths[&1], 1);
}

#[test]
fn never_signal_is_one_episode() {
    let model = Model::Continuing(chain(3, 0.005, 1.0).unwrap());
    let mut agent = lazy(EpisodeSignal::Never).build(Belief::Conjugate(ConjugateBelief::uniform(3, 2).unwrap())).unwrap();
    let (mut env, mut ag) = rngs(2);
    let out = run_agent(agent.as_mut(), &model, 0, 500, &mut env, &mut ag).unwrap();
    assert_eq!(out.trajectory.episode_starts, vec![1]);
}

#[test]
fn doubling_keeps_episode_count_logarithmic() {
    let model = Model::Continuing(chain(3, 0.005, 1.0).unwrap());
    let t = 20_000usize;
    let mut agent = AgentSpec::kind(AgentKind::Ofu).build(Belief::Conjugate(ConjugateBelief::uniform(3, 2).unwrap())).unwrap();
    let (mut env, mut ag) = rngs(4);
    let out = run_agent(agent.as_mut(), &model, 0, t, &mut env, &mut ag).unwrap();
    // Each (s, a) can double at most log2(T) + 1 times, plus the first episode.
    let pairs = 6.0;
    let bound = pairs * ((t as f64).log2() + 1.0) + 1.0;
    assert!((out.episodes.len() as f64) <= bound, "{} > {bound}", out.episodes.len());
}

#[test]
fn smoothed_psrl_on_a_point_mass_keeps_the_model() {
    let m = chain(3, 0.005, 1.0).unwrap();
    let mut agent = SmoothedPsrl::new(Belief::point_mass(m.clone()), 0.9).unwrap();
    let model = Model::Continuing(m.clone());
    let (mut env, mut ag) = rngs(5);
    let out = run_agent(&mut agent, &model, 0, 300, &mut env, &mut ag).unwrap();
    assert_eq!(out.episodes.len(), 300);
    let smoothed = agent.smoothed().expect("planned at least once");
    assert!(smoothed.max_abs_diff(&m) < 1e-12);
}

#[test]
fn agents_are_deterministic_per_stream() {
    let model = Model::Continuing(chain(3, 0.005, 1.0).unwrap());
    let belief = Belief::Conjugate(ConjugateBelief::uniform(3, 2).unwrap());
    let spec = AgentSpec { gamma: Some(0.5), ..AgentSpec::kind(AgentKind::SmoothedPsrl) };
    let run = || {
        let mut agent = spec.build(belief.clone()).unwrap();
        let (mut env, mut ag) = rngs(9);
        run_agent(agent.as_mut(), &model, 0, 400, &mut env, &mut ag).unwrap().trajectory
    };
    assert_eq!(run(), run());
}
