use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regretlab::belief::{Belief, FiniteSupportBelief, Observation};
use regretlab::mdp::{classify, random_mdp, two_point_bandit, TabularMDP, DEFAULT_POLICY_CAP};
use regretlab::planner::{backward_induction, extended_value_iteration, ConfidenceConstructor, HoeffdingRadii, VisitStats};
use std::sync::Arc;

fn mdp_strategy() -> impl Strategy<Value = TabularMDP> {
    (1usize..=4, 1usize..=3, 0.1f64..=1.0, any::<u64>())
        .prop_map(|(s, a, d, seed)| random_mdp(s, a, d, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_distributions(m in mdp_strategy()) {
        for s in 0..m.n_states() {
            for a in 0..m.n_actions() {
                let row = m.row(s, a);
                prop_assert!(row.iter().all(|&p| p >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let r = m.mean_reward(s, a);
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn class_implications(m in mdp_strategy()) {
        let r = classify(&m, DEFAULT_POLICY_CAP);
        if r.ergodic {
            prop_assert!(r.unichain && r.communicating);
        }
        if r.communicating {
            prop_assert!(r.weakly_communicating);
        }
        prop_assert_eq!(r.witnesses.is_empty(), r.ergodic && r.unichain && r.communicating && r.weakly_communicating);
    }

    #[test]
    fn q_values_are_bounded_by_steps_to_go(m in mdp_strategy(), h in 1usize..=6) {
        let (q, pi) = backward_induction(&m, h).unwrap();
        for step in 0..h {
            for s in 0..m.n_states() {
                let v = q.value(step, s);
                prop_assert!(v >= 0.0 && v <= (h - step) as f64 + 1e-12);
                prop_assert_eq!(v, q.q(step, s, pi.action(s, step)));
            }
        }
    }

    #[test]
    fn optimistic_gain_shrinks_with_data(seed in any::<u64>()) {
        let m = random_mdp(3, 2, 1.0, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stats = VisitStats::new(3, 2);
        let ctor = HoeffdingRadii::new(0.05).unwrap();
        let mut s = 0;
        let mut gains = Vec::new();
        for round in 0..4 {
            for _ in 0..(500 << round) {
                let a = rand::Rng::random_range(&mut rng, 0..2);
                let (r, next) = regretlab::mdp::step(&m, s, a, &mut rng).unwrap();
                stats.record(s, a, r, next);
                s = next;
            }
            // Evaluating at a fixed t isolates the effect of the counts.
            let set = ctor.build(&stats, 1000).unwrap();
            gains.push(extended_value_iteration(&set, 1e-6, 1_000_000).unwrap().optimistic_gain);
        }
        for w in gains.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-5, "{gains:?}");
        }
    }

    #[test]
    fn finite_support_weights_stay_normalised(p in 0.01f64..0.99, rewards in prop::collection::vec(0u8..2, 1..20)) {
        let atoms = vec![Arc::new(two_point_bandit(0.0).unwrap()), Arc::new(two_point_bandit(1.0).unwrap())];
        let mut belief = Belief::FiniteSupport(FiniteSupportBelief::new(atoms, vec![1.0 - p, p]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = rewards[0] as f64;
        for &r in rewards.iter().filter(|&&r| r as f64 == first) {
            belief.update(&Observation { state: 0, action: 0, reward: r as f64, next_state: 0 }, &mut rng).unwrap();
            let w = belief.as_finite_support().unwrap().weights();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert_eq!(w[r as usize], 1.0);
        }
    }

    #[test]
    fn simulation_is_deterministic_per_seed(m in mdp_strategy(), seed in any::<u64>()) {
        use regretlab::mdp::{simulate, Model, Policy, StationaryPolicy};
        let pi = Policy::Stationary(StationaryPolicy::constant(m.n_states(), 0));
        let model = Model::Continuing(m);
        let a = simulate(&model, &pi, 0, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = simulate(&model, &pi, 0, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        a.validate().unwrap();
    }
}
