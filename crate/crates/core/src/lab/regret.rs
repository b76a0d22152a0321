//! Regret accounting and the optimism/concentration decomposition.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::EpisodeLog;
use crate::error::{Error, Result};
use crate::mdp::{Model, Policy, TabularMDP, Trajectory};
use crate::planner::{backward_induction, gain, policy_value_finite};

/// One episode of a regret report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub k: usize,
    /// One-based start time.
    pub start: usize,
    pub length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_conc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    #[serde(rename = "T")]
    pub t: usize,
    pub lambda_star: f64,
    /// `cumulative[t - 1] = sum_{i <= t} (lambda_star - r_i)`.
    pub cumulative: Vec<f64>,
    pub episodes: Vec<EpisodeRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RegretReport {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Fills per-episode decomposition terms; `terms` must line up with
    /// the episode records.
    pub fn attach(&mut self, terms: &[Decomposition]) -> Result<()> {
        if terms.len() != self.episodes.len() {
            return Err(Error::Contract(format!(
                "{} decomposition terms for {} episodes",
                terms.len(),
                self.episodes.len()
            )));
        }
        for (rec, d) in self.episodes.iter_mut().zip(terms) {
            rec.delta_opt = Some(d.delta_opt);
            rec.delta_conc = Some(d.delta_conc);
        }
        Ok(())
    }
}

/// Cumulative regret of a trajectory against the reference gain.
pub fn regret_curve(traj: &Trajectory, lambda_star: f64) -> Result<RegretReport> {
    if !(0.0..=1.0).contains(&lambda_star) {
        return Err(Error::Argument(format!("lambda_star {lambda_star} outside [0, 1]")));
    }
    let mut acc = 0.0;
    let cumulative = traj
        .rewards()
        .map(|r| {
            acc += lambda_star - r;
            acc
        })
        .collect();
    let episodes = traj
        .episode_lengths()
        .into_iter()
        .zip(&traj.episode_starts)
        .enumerate()
        .map(|(i, (length, &start))| EpisodeRecord {
            k: i + 1,
            start,
            length,
            delta_opt: None,
            delta_conc: None,
        })
        .collect();
    Ok(RegretReport {
        t: traj.len(),
        lambda_star,
        cumulative,
        episodes,
        seed: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub delta_opt: f64,
    pub delta_conc: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.delta_opt + self.delta_conc
    }
}

fn ptr<T>(a: &Arc<T>) -> usize {
    Arc::as_ptr(a) as usize
}

/// Finite-horizon decomposition
/// `Δ_opt = V*_1 - V^{M_k}_{μ_k,1}` and `Δ_conc = V^{M_k}_{μ_k,1} - V^{M*}_{μ_k,1}`.
///
/// Values are averaged over the initial distribution for an episodic model
/// and taken at each episode's start state for a continuing one (artificial
/// episodes).
pub fn decompose_finite(episodes: &[EpisodeLog], truth: &Model, horizon: usize) -> Result<Vec<Decomposition>> {
    let mdp = truth.mdp();
    if let Some(h) = truth.horizon() {
        if h != horizon {
            return Err(Error::Contract(format!("episode horizon {horizon} differs from the model's {h}")));
        }
    }
    let (q_star, _) = backward_induction(mdp, horizon)?;
    let weights: Option<&[f64]> = match truth {
        Model::Episodic(fh) => Some(fh.initial_dist()),
        Model::Continuing(_) => None,
    };
    let at = |v: &dyn Fn(usize) -> f64, s: usize| -> f64 {
        match weights {
            Some(rho) => rho.iter().enumerate().map(|(j, w)| w * v(j)).sum(),
            None => v(s),
        }
    };
    let mut sampled_values: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut true_values: HashMap<usize, Vec<f64>> = HashMap::new();
    let n = mdp.n_states();
    episodes
        .iter()
        .map(|log| {
            let m = log
                .sampled
                .as_ref()
                .ok_or_else(|| Error::Contract(format!("episode {} has no logged MDP", log.k)))?;
            let Policy::Time(pi) = log.policy.as_ref() else {
                return Err(Error::Contract(format!("episode {} followed a stationary policy", log.k)));
            };
            if pi.horizon() != horizon {
                return Err(Error::Contract(format!("episode {} policy horizon differs", log.k)));
            }
            let vk = match sampled_values.get(&(ptr(m), ptr(&log.policy))) {
                Some(v) => v,
                None => {
                    let q = policy_value_finite(m, pi)?;
                    sampled_values
                        .entry((ptr(m), ptr(&log.policy)))
                        .or_insert((0..n).map(|s| q.value(0, s)).collect())
                }
            };
            let vt = match true_values.get(&ptr(&log.policy)) {
                Some(v) => v,
                None => {
                    let q = policy_value_finite(mdp, pi)?;
                    true_values.entry(ptr(&log.policy)).or_insert((0..n).map(|s| q.value(0, s)).collect())
                }
            };
            let v_star = at(&|s| q_star.value(0, s), log.start_state);
            let v_k = at(&|s| vk[s], log.start_state);
            let v_true = at(&|s| vt[s], log.start_state);
            Ok(Decomposition {
                delta_opt: v_star - v_k,
                delta_conc: v_k - v_true,
            })
        })
        .collect()
}

/// Gain decomposition `Δ_opt = L_k (λ** - λ^k_k)` and
/// `Δ_conc = L_k (λ^k_k - λ*_k)`, with gains at each episode's start state.
///
/// `λ^k_k` is the gain of `μ_k` in the logged MDP; episodes without one
/// (optimistic agents) use the logged planned value.
pub fn decompose_gain(episodes: &[EpisodeLog], truth: &TabularMDP, lambda_star_star: f64) -> Result<Vec<Decomposition>> {
    let mut sampled_gain: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut true_gain: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    episodes
        .iter()
        .map(|log| {
            if log.length == 0 {
                return Ok(Decomposition {
                    delta_opt: 0.0,
                    delta_conc: 0.0,
                });
            }
            let Some(pi) = log.policy.as_stationary() else {
                return Err(Error::Contract(format!("episode {} followed a time-dependent policy", log.k)));
            };
            let s = log.start_state;
            let lambda_k = match &log.sampled {
                Some(m) => {
                    let key = (ptr(m), ptr(&log.policy));
                    if let Entry::Vacant(slot) = sampled_gain.entry(key) {
                        slot.insert(gain(m, pi)?.0);
                    }
                    sampled_gain[&key][s]
                }
                None => log.planned_value,
            };
            let lambda_true = match true_gain.get(pi.actions()) {
                Some(g) => g[s],
                None => {
                    let g = gain(truth, pi)?.0;
                    let v = g[s];
                    true_gain.insert(pi.actions().to_vec(), g);
                    v
                }
            };
            let l = log.length as f64;
            Ok(Decomposition {
                delta_opt: l * (lambda_star_star - lambda_k),
                delta_conc: l * (lambda_k - lambda_true),
            })
        })
        .collect()
}
