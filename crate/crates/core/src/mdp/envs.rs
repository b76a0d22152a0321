//! Built-in environments.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde_json::Value;

use super::{FiniteHorizonMDP, RewardModel, TabularMDP};
use crate::error::{Error, Result};

/// Named-environment parameters as they appear in JSON configs.
pub type EnvParams = BTreeMap<String, Value>;

/// An MDP with or without episodic resets.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Continuing(TabularMDP),
    Episodic(FiniteHorizonMDP),
}

impl Model {
    pub fn mdp(&self) -> &TabularMDP {
        match self {
            Model::Continuing(m) => m,
            Model::Episodic(fh) => fh.base(),
        }
    }

    pub fn horizon(&self) -> Option<usize> {
        match self {
            Model::Continuing(_) => None,
            Model::Episodic(fh) => Some(fh.horizon()),
        }
    }
}

/// Which absorbing state is heaven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeavenHell {
    /// 1 or 2.
    pub heaven: usize,
    /// Pay reward 1 on the step that moves from `s0` into heaven.
    pub arrival_reward: bool,
}

/// Three states `s0, s1, s2`, two actions. From `s0`, action 0 moves to `s1`
/// and action 1 to `s2`; `s1` and `s2` are absorbing under both actions.
/// Every step spent in heaven pays 1 and every step in hell pays 0.
///
/// Rewards are attached to `(s_t, a_t)`. With `arrival_reward` the move from
/// `s0` into heaven also pays 1, so a correct first choice collects one per
/// step from `t = 1`; without it, both actions at `s0` pay 0.
pub fn heaven_hell(heaven: usize, arrival_reward: bool) -> Result<TabularMDP> {
    if heaven != 1 && heaven != 2 {
        return Err(Error::Argument(format!("heaven must be state 1 or 2, got {heaven}")));
    }
    let point = RewardModel::PointMass;
    let mut transitions = vec![vec![vec![0.0; 3]; 2]; 3];
    transitions[0][0][1] = 1.0;
    transitions[0][1][2] = 1.0;
    for s in 1..3 {
        for a in 0..2 {
            transitions[s][a][s] = 1.0;
        }
    }
    let heaven_action = heaven - 1;
    let s0_rewards = (0..2)
        .map(|a| point(if arrival_reward && a == heaven_action { 1.0 } else { 0.0 }))
        .collect();
    let absorbing = |s: usize| vec![point(if s == heaven { 1.0 } else { 0.0 }); 2];
    TabularMDP::new(transitions, vec![s0_rewards, absorbing(1), absorbing(2)])
}

/// One state, one action, deterministic reward `r`.
pub fn two_point_bandit(r: f64) -> Result<TabularMDP> {
    TabularMDP::new(vec![vec![vec![1.0]]], vec![vec![RewardModel::point(r)?]])
}

/// An `n`-state river-swim chain. Action 0 swims left deterministically;
/// action 1 swims right against the current (0.35 right, 0.6 stay,
/// 0.05 back; 0.4/0.6 at the left end; 0.4 back/0.6 stay at the right end).
/// Swimming left at the left bank pays Bernoulli(`small`), swimming right
/// at the right end pays Bernoulli(`large`).
pub fn chain(n: usize, small: f64, large: f64) -> Result<TabularMDP> {
    if n < 2 {
        return Err(Error::Argument(format!("chain needs at least 2 states, got {n}")));
    }
    let mut transitions = vec![vec![vec![0.0; n]; 2]; n];
    let mut rewards = vec![vec![RewardModel::Bernoulli(0.0); 2]; n];
    for s in 0..n {
        transitions[s][0][s.saturating_sub(1)] = 1.0;
        let right = &mut transitions[s][1];
        if s == 0 {
            right[0] = 0.6;
            right[1] = 0.4;
        } else if s == n - 1 {
            right[s - 1] = 0.4;
            right[s] = 0.6;
        } else {
            right[s - 1] = 0.05;
            right[s] = 0.6;
            right[s + 1] = 0.35;
        }
    }
    rewards[0][0] = RewardModel::bernoulli(small)?;
    rewards[n - 1][1] = RewardModel::bernoulli(large)?;
    TabularMDP::new(transitions, rewards)
}

/// Random MDP with Bernoulli rewards. Each row keeps each next state with
/// probability `density` (at least one is kept) and draws weights from a
/// flat Dirichlet over the kept support.
pub fn random_mdp(n_states: usize, n_actions: usize, density: f64, seed: u64) -> Result<TabularMDP> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::Argument("random MDP needs S >= 1 and A >= 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Argument(format!("density {density} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(1.0, 1.0).expect("valid gamma parameters");
    let mut transitions = Vec::with_capacity(n_states * n_actions * n_states);
    let mut rewards = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states * n_actions {
        let mut row: Vec<f64> = (0..n_states)
            .map(|_| {
                if rng.random::<f64>() < density {
                    gamma.sample(&mut rng)
                } else {
                    0.0
                }
            })
            .collect();
        if row.iter().all(|&x| x == 0.0) {
            row[rng.random_range(0..n_states)] = 1.0;
        }
        normalize(&mut row);
        transitions.extend(row);
        rewards.push(RewardModel::Bernoulli(rng.random()));
    }
    TabularMDP::from_flat(n_states, n_actions, transitions, rewards)
}

/// Scales a nonnegative vector to sum to one, placing rounding residue on
/// the largest entry so the sum is exact to within one ulp.
pub(crate) fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    for x in row.iter_mut() {
        *x /= sum;
    }
    let resid = 1.0 - row.iter().sum::<f64>();
    if resid != 0.0 {
        let (imax, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        row[imax] = (row[imax] + resid).max(0.0);
    }
}

fn param_f64(params: &EnvParams, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::config(format!("params.{key}"), "expected a number")),
        None => default.ok_or_else(|| Error::config(format!("params.{key}"), "missing")),
    }
}

fn param_usize(params: &EnvParams, key: &str, default: Option<usize>) -> Result<usize> {
    match params.get(key) {
        Some(v) => v
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::config(format!("params.{key}"), "expected a nonnegative integer")),
        None => default.ok_or_else(|| Error::config(format!("params.{key}"), "missing")),
    }
}

fn param_bool(params: &EnvParams, key: &str, default: bool) -> Result<bool> {
    match params.get(key) {
        Some(v) => v
            .as_bool()
            .ok_or_else(|| Error::config(format!("params.{key}"), "expected a boolean")),
        None => Ok(default),
    }
}

const KNOWN_ENVS: &str = "heaven_hell, two_point_bandit, chain, random";

/// Builds a named environment. Recognized names and parameters:
///
/// - `heaven_hell`: `heaven` (1 or 2, default 1), `arrival_reward` (default true)
/// - `two_point_bandit`: `R` (0 or 1)
/// - `chain`: `n` (default 3), `small` (default 0.005), `large` (default 1.0)
/// - `random`: `S`, `A`, `seed`, `density` (default 1.0)
///
/// Any environment accepts `horizon` (and `initial_state`, default 0) to
/// become a finite-horizon MDP.
pub fn build_named_env(name: &str, params: &EnvParams) -> Result<Model> {
    let allowed: &[&str] = match name {
        "heaven_hell" => &["heaven", "arrival_reward"],
        "two_point_bandit" => &["R"],
        "chain" => &["n", "small", "large"],
        "random" => &["S", "A", "seed", "density"],
        _ => {
            return Err(Error::Argument(format!(
                "unknown environment '{name}' (expected one of {KNOWN_ENVS})"
            )))
        }
    };
    if let Some(k) = params
        .keys()
        .find(|k| !allowed.contains(&k.as_str()) && *k != "horizon" && *k != "initial_state")
    {
        return Err(Error::config(format!("params.{k}"), format!("unknown parameter for {name}")));
    }
    let mdp = match name {
        "heaven_hell" => heaven_hell(
            param_usize(params, "heaven", Some(1))?,
            param_bool(params, "arrival_reward", true)?,
        )?,
        "two_point_bandit" => {
            let r = param_f64(params, "R", None)?;
            if r != 0.0 && r != 1.0 {
                return Err(Error::config("params.R", format!("must be 0 or 1, got {r}")));
            }
            two_point_bandit(r)?
        }
        "chain" => chain(
            param_usize(params, "n", Some(3))?,
            param_f64(params, "small", Some(0.005))?,
            param_f64(params, "large", Some(1.0))?,
        )?,
        "random" => random_mdp(
            param_usize(params, "S", None)?,
            param_usize(params, "A", None)?,
            param_f64(params, "density", Some(1.0))?,
            param_usize(params, "seed", None)? as u64,
        )?,
        _ => unreachable!(),
    };
    match params.get("horizon") {
        None => Ok(Model::Continuing(mdp)),
        Some(_) => {
            let h = param_usize(params, "horizon", None)?;
            let s0 = param_usize(params, "initial_state", Some(0))?;
            Ok(Model::Episodic(FiniteHorizonMDP::with_start_state(mdp, h, s0)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn params(v: Value) -> EnvParams {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn heaven_hell_shape() {
        let m = heaven_hell(2, false).unwrap();
        assert_eq!((m.n_states(), m.n_actions()), (3, 2));
        assert_eq!(m.row(0, 1), &[0.0, 0.0, 1.0]);
        assert_eq!(m.mean_reward(2, 0), 1.0);
        assert_eq!(m.mean_reward(1, 1), 0.0);
        assert_eq!(m.mean_reward(0, 1), 0.0);
        assert_eq!(heaven_hell(2, true).unwrap().mean_reward(0, 1), 1.0);
        assert!(heaven_hell(0, true).is_err());
    }

    #[test]
    fn named_builders() {
        let m = build_named_env("two_point_bandit", &params(json!({"R": 1}))).unwrap();
        assert_eq!(m.mdp().mean_reward(0, 0), 1.0);
        assert!(build_named_env("two_point_bandit", &params(json!({"R": 0.5}))).is_err());
        let m = build_named_env("chain", &params(json!({"n": 5}))).unwrap();
        assert_eq!(m.mdp().n_states(), 5);
        let m = build_named_env("heaven_hell", &params(json!({"horizon": 4}))).unwrap();
        assert_eq!(m.horizon(), Some(4));
        assert!(matches!(
            build_named_env("gridworld", &EnvParams::new()),
            Err(Error::Argument(_))
        ));
        assert!(build_named_env("chain", &params(json!({"m": 5}))).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let a = random_mdp(4, 3, 0.5, 11).unwrap();
        let b = random_mdp(4, 3, 0.5, 11).unwrap();
        let c = random_mdp(4, 3, 0.5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
