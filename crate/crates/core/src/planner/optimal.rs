//! Optimal average reward: exhaustive policy search and relative value
//! iteration.

use serde::{Deserialize, Serialize};

use super::gain::{gain, GainVector};
use crate::error::{Error, Result};
use crate::mdp::{policy_count, weakly_communicating_witness, StationaryPolicy, TabularMDP, DEFAULT_POLICY_CAP};

/// Each row is mixed with the identity at this weight before iterating
/// (`P' = w I + (1 - w) P`). Gains are unchanged; periodicity is removed.
pub const APERIODICITY_WEIGHT: f64 = 0.01;

/// Gains closer than this count as ties.
const GAIN_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMethod {
    BruteForce,
    RelativeVi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RviOptions {
    /// Stop once the span of successive differences drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RviOptions {
    fn default() -> Self {
        RviOptions {
            tolerance: 1e-9,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalGain {
    /// Per-start-state optimal gain.
    pub gain: GainVector,
    /// A policy optimal from every state when `simultaneous`; otherwise the
    /// policy optimal from state 0.
    pub policy: StationaryPolicy,
    /// For each start state, the lowest-ranked policy attaining its optimum.
    pub per_state: Vec<StationaryPolicy>,
    /// False when no single stationary policy is optimal from every state.
    pub simultaneous: bool,
}

impl OptimalGain {
    /// The policy to follow when starting from `s`.
    pub fn policy_for(&self, s: usize) -> &StationaryPolicy {
        if self.simultaneous {
            &self.policy
        } else {
            &self.per_state[s]
        }
    }
}

pub fn optimal_gain(mdp: &TabularMDP, method: GainMethod) -> Result<OptimalGain> {
    match method {
        GainMethod::BruteForce => optimal_gain_brute_force(mdp, DEFAULT_POLICY_CAP),
        GainMethod::RelativeVi => relative_value_iteration(mdp, RviOptions::default()),
    }
}

/// Enumerates all `A^S` stationary policies in lexicographic order.
pub fn optimal_gain_brute_force(mdp: &TabularMDP, cap: u128) -> Result<OptimalGain> {
    let total = policy_count(mdp.n_states(), mdp.n_actions());
    if total > cap {
        return Err(Error::Contract(format!(
            "brute force needs A^S <= {cap}, got {total}"
        )));
    }
    let n = mdp.n_states();
    let mut all: Vec<(StationaryPolicy, GainVector)> = Vec::with_capacity(total as usize);
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut best_idx = vec![0usize; n];
    for policy in StationaryPolicy::enumerate(n, mdp.n_actions()) {
        let g = gain(mdp, &policy)?;
        for s in 0..n {
            if g.at(s) > best[s] + GAIN_TIE {
                best[s] = g.at(s);
                best_idx[s] = all.len();
            }
        }
        all.push((policy, g));
    }
    let gain_vec = GainVector((0..n).map(|s| all[best_idx[s]].1.at(s)).collect());
    let simultaneous = all
        .iter()
        .position(|(_, g)| (0..n).all(|s| g.at(s) >= best[s] - GAIN_TIE));
    let per_state: Vec<StationaryPolicy> = best_idx.iter().map(|&i| all[i].0.clone()).collect();
    Ok(match simultaneous {
        Some(i) => OptimalGain {
            gain: gain_vec,
            policy: all.swap_remove(i).0,
            per_state,
            simultaneous: true,
        },
        None => OptimalGain {
            gain: gain_vec,
            policy: per_state[0].clone(),
            per_state,
            simultaneous: false,
        },
    })
}

/// Relative value iteration with state 0 as the reference. Requires a
/// weakly communicating MDP so the optimal gain is constant.
pub fn relative_value_iteration(mdp: &TabularMDP, opts: RviOptions) -> Result<OptimalGain> {
    if let Some(w) = weakly_communicating_witness(mdp) {
        return Err(Error::Contract(format!("relative value iteration needs a weakly communicating MDP; {w}")));
    }
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let tau = APERIODICITY_WEIGHT;
    let backup = |h: &[f64], s: usize, a: usize| -> f64 {
        let next: f64 = mdp.row(s, a).iter().zip(h).map(|(p, v)| p * v).sum();
        mdp.mean_reward(s, a) + (1.0 - tau) * next + tau * h[s]
    };
    let mut h = vec![0.0; n];
    let mut new = vec![0.0; n];
    let mut span = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        for (s, slot) in new.iter_mut().enumerate() {
            *slot = (0..na).map(|a| backup(&h, s, a)).fold(f64::NEG_INFINITY, f64::max);
        }
        let (lo, hi) = h.iter().zip(&new).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (o, v)| {
            let d = v - o;
            (lo.min(d), hi.max(d))
        });
        span = hi - lo;
        let reference = new[0];
        for (slot, v) in h.iter_mut().zip(&new) {
            *slot = v - reference;
        }
        if span < opts.tolerance {
            let g = 0.5 * (lo + hi);
            let actions = (0..n)
                .map(|s| {
                    let q: Vec<f64> = (0..na).map(|a| backup(&h, s, a)).collect();
                    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    q.iter().position(|&x| x >= m - 1e-10).unwrap()
                })
                .collect();
            let policy = StationaryPolicy::new(actions, na)?;
            return Ok(OptimalGain {
                gain: GainVector(vec![g; n]),
                per_state: vec![policy.clone(); n],
                policy,
                simultaneous: true,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        span,
        advice: "relative value iteration did not reach the span tolerance".into(),
    })
}
