use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regretlab::belief::{Belief, ConjugateBelief, Observation};

fn random_observations(n: usize, seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Observation {
            state: rng.random_range(0..3),
            action: rng.random_range(0..2),
            reward: rng.random_range(0..2) as f64,
            next_state: rng.random_range(0..3),
        })
        .collect()
}

/// The conjugate posterior depends only on counts, so any ordering of the
/// same data gives the same belief.
#[test]
fn conjugate_updates_are_exchangeable() {
    let obs = random_observations(300, 1);
    let mut reversed = obs.clone();
    reversed.reverse();
    let mut shuffled = obs.clone();
    shuffled.rotate_left(97);
    let fit = |data: &[Observation]| {
        let mut b = Belief::Conjugate(ConjugateBelief::uniform(3, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for o in data {
            b.update(o, &mut rng).unwrap();
        }
        b
    };
    let a = fit(&obs);
    assert_eq!(a, fit(&reversed));
    assert_eq!(a, fit(&shuffled));
}

#[test]
fn posterior_mean_tracks_counts() {
    let mut b = Belief::Conjugate(ConjugateBelief::uniform(2, 1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..8 {
        b.update(&Observation { state: 0, action: 0, reward: 1.0, next_state: 1 }, &mut rng).unwrap();
    }
    let m = b.posterior_mean();
    assert!((m.row(0, 0)[1] - 9.0 / 10.0).abs() < 1e-12);
    assert!((m.mean_reward(0, 0) - 9.0 / 10.0).abs() < 1e-12);
}

#[test]
fn out_of_range_observations_are_rejected() {
    let mut b = Belief::Conjugate(ConjugateBelief::uniform(2, 1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(b.update(&Observation { state: 2, action: 0, reward: 0.0, next_state: 0 }, &mut rng).is_err());
    assert!(b.update(&Observation { state: 0, action: 0, reward: 1.5, next_state: 0 }, &mut rng).is_err());
}
