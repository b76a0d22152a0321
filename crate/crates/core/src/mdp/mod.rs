//! Tabular MDP data model, simulation, connectedness classification and the
//! built-in environments.
//!
//! States and actions are zero-based indices. Transition rows are stored
//! flattened as `[(s * A + a) * S + s']`.

mod classify;
mod envs;
mod io;
mod sim;

pub use classify::{classify, end_components, ClassifyMethod, ConnectednessReport, CAPPED_SAMPLE_SEED, DEFAULT_POLICY_CAP};
pub(crate) use classify::weakly_communicating_witness;
pub use envs::{build_named_env, chain, heaven_hell, random_mdp, two_point_bandit, EnvParams, HeavenHell, Model};
pub(crate) use envs::normalize;
pub(crate) use sim::step_unchecked;
pub use io::{load_model, model_to_json, parse_model, MdpDocument, RewardDocument, RewardKind};
pub use sim::{simulate, step, Step, Trajectory};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums must match 1 within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Reward distribution of a single state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardModel {
    /// Reward 1 with probability `p`, else 0.
    Bernoulli(f64),
    /// Deterministic reward `v`.
    PointMass(f64),
}

impl RewardModel {
    pub fn bernoulli(p: f64) -> Result<Self> {
        check_unit("bernoulli probability", p)?;
        Ok(RewardModel::Bernoulli(p))
    }

    pub fn point(v: f64) -> Result<Self> {
        check_unit("point reward", v)?;
        Ok(RewardModel::PointMass(v))
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RewardModel::Bernoulli(p) | RewardModel::PointMass(p) => p,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RewardModel::Bernoulli(p) => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::PointMass(v) => v,
        }
    }

    /// Probability (mass) that this model emits reward `r`. Point masses
    /// match within `1e-9`.
    pub fn likelihood(&self, r: f64) -> f64 {
        match *self {
            RewardModel::Bernoulli(p) => {
                if r == 1.0 {
                    p
                } else if r == 0.0 {
                    1.0 - p
                } else {
                    0.0
                }
            }
            RewardModel::PointMass(v) => {
                if (r - v).abs() <= 1e-9 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match *self {
            RewardModel::PointMass(_) => true,
            RewardModel::Bernoulli(p) => p == 0.0 || p == 1.0,
        }
    }
}

fn check_unit(what: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Argument(format!("{what} {x} outside [0, 1]")))
    }
}

/// A finite MDP with rewards in `[0, 1]` and a row-stochastic kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct TabularMDP {
    n_states: usize,
    n_actions: usize,
    rewards: Vec<RewardModel>,
    transitions: Vec<f64>,
}

impl TabularMDP {
    /// Builds an MDP from nested tables `transitions[s][a][s']` and
    /// `rewards[s][a]`, validating every invariant.
    pub fn new(transitions: Vec<Vec<Vec<f64>>>, rewards: Vec<Vec<RewardModel>>) -> Result<Self> {
        let n_states = transitions.len();
        let n_actions = transitions.first().map_or(0, Vec::len);
        if rewards.len() != n_states {
            return Err(Error::invalid_mdp(
                "rewards",
                format!("expected {n_states} states, found {}", rewards.len()),
            ));
        }
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        let mut flat_rewards = Vec::with_capacity(n_states * n_actions);
        for (s, (rows, rs)) in transitions.into_iter().zip(rewards).enumerate() {
            if rows.len() != n_actions {
                return Err(Error::invalid_mdp(
                    format!("transitions[{s}]"),
                    format!("expected {n_actions} actions, found {}", rows.len()),
                ));
            }
            if rs.len() != n_actions {
                return Err(Error::invalid_mdp(
                    format!("rewards[{s}]"),
                    format!("expected {n_actions} actions, found {}", rs.len()),
                ));
            }
            for (a, row) in rows.into_iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::invalid_mdp(
                        format!("transitions[{s}][{a}]"),
                        format!("expected {n_states} entries, found {}", row.len()),
                    ));
                }
                flat.extend(row);
            }
            flat_rewards.extend(rs);
        }
        Self::from_flat(n_states, n_actions, flat, flat_rewards)
    }

    /// Builds an MDP from flattened tables (see module docs for layout).
    pub fn from_flat(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<RewardModel>,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::invalid_mdp("n_states", "must be at least 1"));
        }
        if n_actions == 0 {
            return Err(Error::invalid_mdp("n_actions", "must be at least 1"));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::invalid_mdp(
                "transitions",
                format!(
                    "expected {} entries, found {}",
                    n_states * n_actions * n_states,
                    transitions.len()
                ),
            ));
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::invalid_mdp(
                "rewards",
                format!("expected {} entries, found {}", n_states * n_actions, rewards.len()),
            ));
        }
        for (i, row) in transitions.chunks_exact(n_states).enumerate() {
            let (s, a) = (i / n_actions, i % n_actions);
            if let Some(j) = row.iter().position(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid_mdp(
                    format!("transitions[{s}][{a}][{j}]"),
                    format!("entry {} is negative or not finite", row[j]),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::invalid_mdp(
                    format!("transitions[{s}][{a}]"),
                    format!("row sums to {sum:.17}, expected 1"),
                ));
            }
        }
        for (i, r) in rewards.iter().enumerate() {
            let m = r.mean();
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::invalid_mdp(
                    format!("rewards[{}][{}]", i / n_actions, i % n_actions),
                    format!("reward value {m} outside [0, 1]"),
                ));
            }
        }
        Ok(TabularMDP {
            n_states,
            n_actions,
            rewards,
            transitions,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// Next-state distribution of `(s, a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.pair(s, a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> RewardModel {
        self.rewards[self.pair(s, a)]
    }

    #[inline]
    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[self.pair(s, a)].mean()
    }

    pub fn transitions_flat(&self) -> &[f64] {
        &self.transitions
    }

    pub fn rewards_flat(&self) -> &[RewardModel] {
        &self.rewards
    }

    /// True when every reward is deterministic and every row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rewards.iter().all(RewardModel::is_deterministic)
            && self.transitions.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s < self.n_states {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "state {s} out of range (n_states = {})",
                self.n_states
            )))
        }
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a < self.n_actions {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "action {a} out of range (n_actions = {})",
                self.n_actions
            )))
        }
    }

    /// Transition matrix (row-major `S x S`) and reward vector induced by a
    /// stationary policy.
    pub fn induced_chain(&self, policy: &StationaryPolicy) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_states;
        let mut p = Vec::with_capacity(n * n);
        let mut r = Vec::with_capacity(n);
        for s in 0..n {
            let a = policy.action(s);
            p.extend_from_slice(self.row(s, a));
            r.push(self.mean_reward(s, a));
        }
        (p, r)
    }

    /// Largest absolute entrywise difference between two MDPs of equal shape,
    /// over transition probabilities and reward means.
    pub fn max_abs_diff(&self, other: &TabularMDP) -> f64 {
        let dt = self
            .transitions
            .iter()
            .zip(&other.transitions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dr = self
            .rewards
            .iter()
            .zip(&other.rewards)
            .map(|(a, b)| (a.mean() - b.mean()).abs())
            .fold(0.0, f64::max);
        dt.max(dr)
    }

    pub fn same_shape(&self, other: &TabularMDP) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }
}

/// A finite-horizon MDP: the state resets from `initial_dist` every
/// `horizon` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonMDP {
    base: TabularMDP,
    horizon: usize,
    initial_dist: Vec<f64>,
}

impl FiniteHorizonMDP {
    pub fn new(base: TabularMDP, horizon: usize, initial_dist: Vec<f64>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid_mdp("horizon", "must be at least 1"));
        }
        if initial_dist.len() != base.n_states() {
            return Err(Error::invalid_mdp(
                "initial_dist",
                format!(
                    "expected {} entries, found {}",
                    base.n_states(),
                    initial_dist.len()
                ),
            ));
        }
        if let Some(j) = initial_dist.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid_mdp(
                format!("initial_dist[{j}]"),
                "entry is negative or not finite",
            ));
        }
        let sum: f64 = initial_dist.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::invalid_mdp(
                "initial_dist",
                format!("sums to {sum:.17}, expected 1"),
            ));
        }
        Ok(FiniteHorizonMDP {
            base,
            horizon,
            initial_dist,
        })
    }

    /// Resets deterministically to `state`.
    pub fn with_start_state(base: TabularMDP, horizon: usize, state: usize) -> Result<Self> {
        base.check_state(state)?;
        let mut rho = vec![0.0; base.n_states()];
        rho[state] = 1.0;
        Self::new(base, horizon, rho)
    }

    pub fn base(&self) -> &TabularMDP {
        &self.base
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.initial_dist, rng)
    }
}

/// Draws an index from a probability vector with a single uniform.
#[inline]
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    if probs.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// A deterministic stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StationaryPolicy {
    actions: Vec<usize>,
}

impl StationaryPolicy {
    pub fn new(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some(s) = actions.iter().position(|&a| a >= n_actions) {
            return Err(Error::Argument(format!(
                "policy action {} at state {s} out of range (n_actions = {n_actions})",
                actions[s]
            )));
        }
        Ok(StationaryPolicy { actions })
    }

    /// The same action in every state.
    pub fn constant(n_states: usize, action: usize) -> Self {
        StationaryPolicy {
            actions: vec![action; n_states],
        }
    }

    #[inline]
    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    /// Every deterministic stationary policy in lexicographic order
    /// (state 0 varies slowest), so lower actions come first.
    pub fn enumerate(n_states: usize, n_actions: usize) -> PolicyEnumerator {
        PolicyEnumerator {
            current: Some(vec![0; n_states]),
            n_actions,
        }
    }

    /// Policy with lexicographic rank `index` (inverse of [`Self::enumerate`]).
    pub fn from_index(mut index: u128, n_states: usize, n_actions: usize) -> Self {
        let mut actions = vec![0; n_states];
        for s in (0..n_states).rev() {
            actions[s] = (index % n_actions as u128) as usize;
            index /= n_actions as u128;
        }
        StationaryPolicy { actions }
    }
}

/// Iterator over all `A^S` stationary policies.
pub struct PolicyEnumerator {
    current: Option<Vec<usize>>,
    n_actions: usize,
}

impl Iterator for PolicyEnumerator {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<StationaryPolicy> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.n_actions {
                break;
            }
            cur[i] = 0;
        }
        Some(StationaryPolicy { actions: out })
    }
}

/// Number of stationary policies `A^S`, saturating at `u128::MAX`.
pub fn policy_count(n_states: usize, n_actions: usize) -> u128 {
    let mut n: u128 = 1;
    for _ in 0..n_states {
        n = n.saturating_mul(n_actions as u128);
    }
    n
}

/// A non-stationary policy over periods `h = 0..horizon` of an episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimePolicy {
    horizon: usize,
    n_states: usize,
    /// Indexed `[h * S + s]`.
    actions: Vec<usize>,
}

impl TimePolicy {
    pub fn new(horizon: usize, n_states: usize, actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Argument("time policy horizon must be at least 1".into()));
        }
        if actions.len() != horizon * n_states {
            return Err(Error::Argument(format!(
                "time policy needs {} entries, found {}",
                horizon * n_states,
                actions.len()
            )));
        }
        if let Some(i) = actions.iter().position(|&a| a >= n_actions) {
            return Err(Error::Argument(format!(
                "time policy action {} at period {} state {} out of range",
                actions[i],
                i / n_states,
                i % n_states
            )));
        }
        Ok(TimePolicy {
            horizon,
            n_states,
            actions,
        })
    }

    /// Period is zero-based: `h` in `0..horizon`.
    #[inline]
    pub fn action(&self, s: usize, h: usize) -> usize {
        self.actions[h * self.n_states + s]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// A time policy that ignores the period.
    pub fn from_stationary(policy: &StationaryPolicy, horizon: usize) -> Self {
        let n_states = policy.n_states();
        let mut actions = Vec::with_capacity(horizon * n_states);
        for _ in 0..horizon {
            actions.extend_from_slice(policy.actions());
        }
        TimePolicy {
            horizon,
            n_states,
            actions,
        }
    }
}

/// Either kind of deterministic policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Stationary(StationaryPolicy),
    Time(TimePolicy),
}

impl Policy {
    /// Action at state `s`, `h` steps into the current episode.
    #[inline]
    pub fn action(&self, s: usize, h: usize) -> usize {
        match self {
            Policy::Stationary(p) => p.action(s),
            Policy::Time(p) => p.action(s, h.min(p.horizon() - 1)),
        }
    }

    pub fn as_stationary(&self) -> Option<&StationaryPolicy> {
        match self {
            Policy::Stationary(p) => Some(p),
            Policy::Time(_) => None,
        }
    }

    pub fn as_time(&self) -> Option<&TimePolicy> {
        match self {
            Policy::Time(p) => Some(p),
            Policy::Stationary(_) => None,
        }
    }
}

impl From<StationaryPolicy> for Policy {
    fn from(p: StationaryPolicy) -> Self {
        Policy::Stationary(p)
    }
}

impl From<TimePolicy> for Policy {
    fn from(p: TimePolicy) -> Self {
        Policy::Time(p)
    }
}
