//! Priors and posteriors over tabular MDPs.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{normalize, sample_index, RewardModel, TabularMDP};

/// Weights must sum to 1 within this tolerance.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// One observed transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Explicit weighted list of MDPs sharing one shape. Atoms are shared
/// (`Arc`) so plans can be cached per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFiniteSupport")]
pub struct FiniteSupportBelief {
    atoms: Vec<Arc<TabularMDP>>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiniteSupport {
    atoms: Vec<Arc<TabularMDP>>,
    weights: Vec<f64>,
}

impl TryFrom<RawFiniteSupport> for FiniteSupportBelief {
    type Error = Error;
    fn try_from(raw: RawFiniteSupport) -> Result<Self> {
        FiniteSupportBelief::new(raw.atoms, raw.weights)
    }
}

impl FiniteSupportBelief {
    pub fn new(atoms: Vec<Arc<TabularMDP>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Argument("a finite-support belief needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::Argument(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if atoms.iter().any(|m| !m.same_shape(&atoms[0])) {
            return Err(Error::Argument("all atoms must share (S, A)".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Argument("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Argument(format!("weights sum to {sum}, expected 1")));
        }
        Ok(FiniteSupportBelief { atoms, weights })
    }

    pub fn point_mass(mdp: Arc<TabularMDP>) -> Self {
        FiniteSupportBelief {
            atoms: vec![mdp],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Arc<TabularMDP>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of an atom drawn by weight.
    pub fn sample_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.weights, rng)
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        let mut total = 0.0;
        for (w, m) in self.weights.iter_mut().zip(&self.atoms) {
            if *w == 0.0 {
                continue;
            }
            let like = m.reward(obs.state, obs.action).likelihood(obs.reward) * m.row(obs.state, obs.action)[obs.next_state];
            *w *= like;
            total += *w;
        }
        if !(total > 0.0) {
            return Err(Error::Inconsistent(format!(
                "observation ({}, {}, {}, {}) has zero likelihood under every atom",
                obs.state, obs.action, obs.reward, obs.next_state
            )));
        }
        for w in &mut self.weights {
            *w /= total;
        }
        Ok(())
    }
}

/// Independent Dirichlet transitions and Beta reward means per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConjugate")]
pub struct ConjugateBelief {
    n_states: usize,
    n_actions: usize,
    /// `[(s * A + a) * S + s']`.
    dirichlet: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConjugate {
    n_states: usize,
    n_actions: usize,
    dirichlet: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl TryFrom<RawConjugate> for ConjugateBelief {
    type Error = Error;
    fn try_from(raw: RawConjugate) -> Result<Self> {
        let (ns, na) = (raw.n_states, raw.n_actions);
        if ns == 0 || na == 0 {
            return Err(Error::Argument("n_states and n_actions must be positive".into()));
        }
        if raw.dirichlet.len() != ns * na * ns || raw.alpha.len() != ns * na || raw.beta.len() != ns * na {
            return Err(Error::Argument("conjugate tables have the wrong length".into()));
        }
        if raw.dirichlet.iter().chain(&raw.alpha).chain(&raw.beta).any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::Argument("conjugate parameters must be positive".into()));
        }
        Ok(ConjugateBelief {
            n_states: ns,
            n_actions: na,
            dirichlet: raw.dirichlet,
            alpha: raw.alpha,
            beta: raw.beta,
        })
    }
}

impl ConjugateBelief {
    /// Dirichlet(1, .., 1) rows and Beta(1, 1) rewards.
    pub fn uniform(n_states: usize, n_actions: usize) -> Result<Self> {
        Self::symmetric(n_states, n_actions, 1.0, 1.0, 1.0)
    }

    pub fn symmetric(n_states: usize, n_actions: usize, dirichlet: f64, alpha: f64, beta: f64) -> Result<Self> {
        RawConjugate {
            n_states,
            n_actions,
            dirichlet: vec![dirichlet; n_states * n_actions * n_states],
            alpha: vec![alpha; n_states * n_actions],
            beta: vec![beta; n_states * n_actions],
        }
        .try_into()
    }

    pub fn dirichlet(&self, s: usize, a: usize) -> &[f64] {
        let i = s * self.n_actions + a;
        &self.dirichlet[i * self.n_states..(i + 1) * self.n_states]
    }

    pub fn beta_params(&self, s: usize, a: usize) -> (f64, f64) {
        let i = s * self.n_actions + a;
        (self.alpha[i], self.beta[i])
    }

    fn update<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) {
        let i = obs.state * self.n_actions + obs.action;
        self.dirichlet[i * self.n_states + obs.next_state] += 1.0;
        // Rewards strictly inside (0, 1) are rounded to 1 with probability r,
        // which keeps the Beta update exact and unbiased.
        let r = if obs.reward == 0.0 || obs.reward == 1.0 {
            obs.reward
        } else if rng.random::<f64>() < obs.reward {
            1.0
        } else {
            0.0
        };
        self.alpha[i] += r;
        self.beta[i] += 1.0 - r;
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TabularMDP {
        let ns = self.n_states;
        let mut transitions = Vec::with_capacity(self.dirichlet.len());
        for row in self.dirichlet.chunks_exact(ns) {
            transitions.extend(sample_dirichlet(row, rng));
        }
        let rewards = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| {
                let p: f64 = Beta::new(a, b).expect("positive parameters").sample(rng);
                RewardModel::Bernoulli(p.clamp(0.0, 1.0))
            })
            .collect();
        TabularMDP::from_flat(ns, self.n_actions, transitions, rewards).expect("dirichlet rows are stochastic")
    }

    fn mean(&self) -> TabularMDP {
        let ns = self.n_states;
        let mut transitions = Vec::with_capacity(self.dirichlet.len());
        for row in self.dirichlet.chunks_exact(ns) {
            let total: f64 = row.iter().sum();
            let mut m: Vec<f64> = row.iter().map(|c| c / total).collect();
            normalize(&mut m);
            transitions.extend(m);
        }
        let rewards = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| RewardModel::Bernoulli(a / (a + b)))
            .collect();
        TabularMDP::from_flat(ns, self.n_actions, transitions, rewards).expect("mean rows are stochastic")
    }
}

/// Gamma-normalised Dirichlet draw, renormalised so the row sums to 1
/// within [`crate::mdp::ROW_TOLERANCE`].
pub(crate) fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let total: f64 = row.iter().sum();
        // All-zero draws underflow only for tiny shapes; redraw.
        if total > 0.0 && total.is_finite() {
            for x in &mut row {
                *x /= total;
            }
            normalize(&mut row);
            return row;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Belief {
    FiniteSupport(FiniteSupportBelief),
    Conjugate(ConjugateBelief),
}

impl Belief {
    pub fn point_mass(mdp: TabularMDP) -> Self {
        Belief::FiniteSupport(FiniteSupportBelief::point_mass(Arc::new(mdp)))
    }

    pub fn n_states(&self) -> usize {
        match self {
            Belief::FiniteSupport(b) => b.atoms[0].n_states(),
            Belief::Conjugate(b) => b.n_states,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Belief::FiniteSupport(b) => b.atoms[0].n_actions(),
            Belief::Conjugate(b) => b.n_actions,
        }
    }

    /// Posterior after one observation. The `rng` is used only for
    /// randomised rounding of fractional rewards under a conjugate belief.
    pub fn update<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> Result<()> {
        let (ns, na) = (self.n_states(), self.n_actions());
        if obs.state >= ns || obs.next_state >= ns || obs.action >= na {
            return Err(Error::Argument(format!(
                "observation ({}, {}, _, {}) out of range for S={ns}, A={na}",
                obs.state, obs.action, obs.next_state
            )));
        }
        if !(0.0..=1.0).contains(&obs.reward) {
            return Err(Error::Argument(format!("reward {} outside [0, 1]", obs.reward)));
        }
        match self {
            Belief::FiniteSupport(b) => b.update(obs),
            Belief::Conjugate(b) => {
                b.update(obs, rng);
                Ok(())
            }
        }
    }

    pub fn sample_mdp<R: Rng + ?Sized>(&self, rng: &mut R) -> Arc<TabularMDP> {
        match self {
            Belief::FiniteSupport(b) => Arc::clone(&b.atoms[b.sample_atom(rng)]),
            Belief::Conjugate(b) => Arc::new(b.sample(rng)),
        }
    }

    /// Weight-averaged atoms, or the Dirichlet/Beta means.
    pub fn posterior_mean(&self) -> TabularMDP {
        match self {
            Belief::Conjugate(b) => b.mean(),
            Belief::FiniteSupport(b) => {
                if let [only] = b.atoms.as_slice() {
                    return (**only).clone();
                }
                let first = &b.atoms[0];
                let (ns, na) = (first.n_states(), first.n_actions());
                let mut transitions = vec![0.0; ns * na * ns];
                let mut means = vec![0.0; ns * na];
                let mut deterministic = vec![true; ns * na];
                for (m, &w) in b.atoms.iter().zip(&b.weights) {
                    for (acc, p) in transitions.iter_mut().zip(m.transitions_flat()) {
                        *acc += w * p;
                    }
                    for ((acc, det), r) in means.iter_mut().zip(&mut deterministic).zip(m.rewards_flat()) {
                        *acc += w * r.mean();
                        *det &= matches!(r, RewardModel::PointMass(_));
                    }
                }
                for row in transitions.chunks_exact_mut(ns) {
                    normalize(row);
                }
                let rewards = means
                    .into_iter()
                    .zip(deterministic)
                    .map(|(m, det)| {
                        let m = m.clamp(0.0, 1.0);
                        if det {
                            RewardModel::PointMass(m)
                        } else {
                            RewardModel::Bernoulli(m)
                        }
                    })
                    .collect();
                TabularMDP::from_flat(ns, na, transitions, rewards).expect("mixture rows are stochastic")
            }
        }
    }

    pub fn as_finite_support(&self) -> Option<&FiniteSupportBelief> {
        match self {
            Belief::FiniteSupport(b) => Some(b),
            Belief::Conjugate(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::two_point_bandit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit_prior(p: f64) -> Belief {
        let atoms = vec![Arc::new(two_point_bandit(0.0).unwrap()), Arc::new(two_point_bandit(1.0).unwrap())];
        Belief::FiniteSupport(FiniteSupportBelief::new(atoms, vec![1.0 - p, p]).unwrap())
    }

    fn obs(s: usize, a: usize, r: f64, n: usize) -> Observation {
        Observation {
            state: s,
            action: a,
            reward: r,
            next_state: n,
        }
    }

    #[test]
    fn two_point_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b = bandit_prior(0.5);
        b.update(&obs(0, 0, 1.0, 0), &mut rng).unwrap();
        assert_eq!(b.as_finite_support().unwrap().weights(), &[0.0, 1.0]);
        let err = b.update(&obs(0, 0, 0.0, 0), &mut rng).unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn conjugate_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b = Belief::Conjugate(ConjugateBelief::uniform(2, 1).unwrap());
        b.update(&obs(0, 0, 1.0, 1), &mut rng).unwrap();
        let Belief::Conjugate(c) = &b else { unreachable!() };
        assert_eq!(c.beta_params(0, 0), (2.0, 1.0));
        assert_eq!(c.dirichlet(0, 0), &[1.0, 2.0]);
        assert!((b.posterior_mean().mean_reward(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!(b.update(&obs(0, 1, 1.0, 1), &mut rng).is_err());
        assert!(b.update(&obs(0, 0, 1.5, 1), &mut rng).is_err());
    }

    #[test]
    fn fractional_reward_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = ConjugateBelief::uniform(1, 1).unwrap();
        for _ in 0..20_000 {
            b.update(&obs(0, 0, 0.25, 0), &mut rng);
        }
        let (a, _) = b.beta_params(0, 0);
        assert!(((a - 1.0) / 20_000.0 - 0.25).abs() < 0.01);
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = bandit_prior(0.5);
        let n = 100_000;
        let ones = (0..n).filter(|_| b.sample_mdp(&mut rng).mean_reward(0, 0) == 1.0).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);

        let c = Belief::Conjugate(ConjugateBelief::uniform(3, 1).unwrap());
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let m = c.sample_mdp(&mut rng);
            for (x, p) in acc.iter_mut().zip(m.row(0, 0)) {
                *x += p;
            }
        }
        for x in acc {
            assert!((x / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn point_mass_is_fixed() {
        let m = crate::mdp::chain(3, 0.005, 1.0).unwrap();
        let b = Belief::point_mass(m.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(*b.sample_mdp(&mut rng), m);
        assert_eq!(b.posterior_mean(), m);
        assert_eq!(bandit_prior(0.5).posterior_mean().mean_reward(0, 0), 0.5);
    }

    #[test]
    fn json_round_trip() {
        for b in [bandit_prior(0.25), Belief::Conjugate(ConjugateBelief::uniform(2, 2).unwrap())] {
            let text = serde_json::to_string(&b).unwrap();
            let back: Belief = serde_json::from_str(&text).unwrap();
            assert_eq!(back, b);
        }
        let bad = r#"{"kind":"finite_support","atoms":[],"weights":[]}"#;
        assert!(serde_json::from_str::<Belief>(bad).is_err());
    }
}
