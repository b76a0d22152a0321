use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_index, Model, Policy, TabularMDP};
use crate::error::{Error, Result};

/// One transition `(s_t, a_t, r_t, s_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Samples a reward and next state for `(s, a)`.
pub fn step<R: Rng + ?Sized>(mdp: &TabularMDP, s: usize, a: usize, rng: &mut R) -> Result<(f64, usize)> {
    mdp.check_state(s)?;
    mdp.check_action(a)?;
    Ok(step_unchecked(mdp, s, a, rng))
}

/// Reward is drawn before the next state, always in that order.
#[inline]
pub(crate) fn step_unchecked<R: Rng + ?Sized>(mdp: &TabularMDP, s: usize, a: usize, rng: &mut R) -> (f64, usize) {
    let r = mdp.reward(s, a).sample(rng);
    let next = sample_index(mdp.row(s, a), rng);
    (r, next)
}

/// Interaction history with episode annotations.
///
/// Timesteps are one-based in `episode_starts`, matching `t = 1, 2, ..`.
/// Consecutive steps chain (`next_state` of step `t` is the state of step
/// `t + 1`) except across reset boundaries of a finite-horizon run, where the
/// state is redrawn from the initial distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start_state: usize,
    pub steps: Vec<Step>,
    pub episode_starts: Vec<usize>,
    /// Reset period of a finite-horizon environment, if any.
    pub reset_period: Option<usize>,
}

impl Trajectory {
    pub fn new(start_state: usize, reset_period: Option<usize>) -> Self {
        Trajectory {
            start_state,
            steps: Vec::new(),
            episode_starts: Vec::new(),
            reset_period,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards().sum()
    }

    /// `K(T)`: number of episodes begun.
    pub fn episode_count(&self) -> usize {
        self.episode_starts.len()
    }

    /// Realized episode lengths `L_k`; they sum to `T`.
    pub fn episode_lengths(&self) -> Vec<usize> {
        let t_end = self.steps.len() + 1;
        self.episode_starts
            .iter()
            .enumerate()
            .map(|(i, &start)| self.episode_starts.get(i + 1).copied().unwrap_or(t_end) - start)
            .collect()
    }

    /// Episode index `k(t)` (one-based) for each timestep.
    pub fn episode_index(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.steps.len());
        for (k, len) in self.episode_lengths().into_iter().enumerate() {
            out.extend(std::iter::repeat_n(k + 1, len));
        }
        out
    }

    /// Checks the structural invariants; used by tests and replay tooling.
    pub fn validate(&self) -> Result<()> {
        if !self.steps.is_empty() && self.episode_starts.first() != Some(&1) {
            return Err(Error::Contract("episode_starts must begin with 1".into()));
        }
        if self.episode_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("episode_starts must be strictly increasing".into()));
        }
        if self.episode_starts.last().is_some_and(|&t| t > self.steps.len()) {
            return Err(Error::Contract("episode starts past the end of the trajectory".into()));
        }
        if let Some(first) = self.steps.first() {
            if first.state != self.start_state {
                return Err(Error::Contract("first step does not start at start_state".into()));
            }
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            let t = i + 1;
            let reset = self.reset_period.is_some_and(|h| t % h == 0);
            if !reset && w[0].next_state != w[1].state {
                return Err(Error::Contract(format!("steps {t} and {} do not chain", t + 1)));
            }
        }
        if let Some(i) = self.steps.iter().position(|s| !(0.0..=1.0).contains(&s.reward)) {
            return Err(Error::Contract(format!("reward at t={} outside [0, 1]", i + 1)));
        }
        Ok(())
    }
}

/// Runs a fixed policy for `t_max` steps from `s1`.
///
/// A [`Policy::Time`] requires an episodic model: the state is redrawn from
/// the initial distribution every `horizon` steps and episodes start at
/// `1, H + 1, 2H + 1, ..`.
pub fn simulate<R: Rng + ?Sized>(
    model: &Model,
    policy: &Policy,
    s1: usize,
    t_max: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    if t_max == 0 {
        return Err(Error::Argument("simulate needs T >= 1".into()));
    }
    let mdp = model.mdp();
    mdp.check_state(s1)?;
    let n_policy_states = match policy {
        Policy::Stationary(p) => p.n_states(),
        Policy::Time(p) => p.n_states(),
    };
    if n_policy_states != mdp.n_states() {
        return Err(Error::Argument("policy and MDP disagree on n_states".into()));
    }
    let reset = match (model, policy) {
        (Model::Continuing(_), Policy::Time(_)) => {
            return Err(Error::Contract(
                "a time-dependent policy needs a finite-horizon MDP".into(),
            ))
        }
        (Model::Continuing(_), Policy::Stationary(_)) => None,
        (Model::Episodic(fh), Policy::Time(p)) if p.horizon() != fh.horizon() => {
            return Err(Error::Contract(format!(
                "time policy horizon {} differs from MDP horizon {}",
                p.horizon(),
                fh.horizon()
            )))
        }
        (Model::Episodic(fh), _) => Some(fh),
    };

    let mut traj = Trajectory::new(s1, reset.map(|fh| fh.horizon()));
    traj.steps.reserve(t_max);
    let mut s = s1;
    for t in 1..=t_max {
        let h = match reset {
            Some(fh) => (t - 1) % fh.horizon(),
            None => t - 1,
        };
        if h == 0 && (reset.is_some() || t == 1) {
            traj.episode_starts.push(t);
        }
        let a = policy.action(s, h);
        let (r, next) = step_unchecked(mdp, s, a, rng);
        traj.steps.push(super::Step {
            state: s,
            action: a,
            reward: r,
            next_state: next,
        });
        s = match reset {
            Some(fh) if t % fh.horizon() == 0 => fh.sample_initial(rng),
            _ => next,
        };
    }
    Ok(traj)
}
