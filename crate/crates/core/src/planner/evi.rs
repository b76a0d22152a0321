//! Optimistic planning over confidence sets of MDPs.
//!
//! A confidence set is a box of reward means around an empirical centre plus
//! an L1 ball of transition rows. Extended value iteration plans in the MDP
//! whose actions also choose the most favourable member of the set.

use serde::{Deserialize, Serialize};

use super::optimal::APERIODICITY_WEIGHT;
use crate::error::{Error, Result};
use crate::mdp::{RewardModel, StationaryPolicy, TabularMDP};

/// Sufficient statistics of a history: visit, reward and transition counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitStats {
    pub n_states: usize,
    pub n_actions: usize,
    /// `N(s, a)`.
    pub visits: Vec<u64>,
    pub reward_sums: Vec<f64>,
    /// `N(s, a, s')`, indexed `[(s * A + a) * S + s']`.
    pub transitions: Vec<u64>,
    /// Steps recorded.
    pub steps: u64,
}

impl VisitStats {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        VisitStats {
            n_states,
            n_actions,
            visits: vec![0; n_states * n_actions],
            reward_sums: vec![0.0; n_states * n_actions],
            transitions: vec![0; n_states * n_actions * n_states],
            steps: 0,
        }
    }

    pub fn record(&mut self, s: usize, a: usize, r: f64, next: usize) {
        let i = s * self.n_actions + a;
        self.visits[i] += 1;
        self.reward_sums[i] += r;
        self.transitions[i * self.n_states + next] += 1;
        self.steps += 1;
    }
}

/// A set of plausible MDPs: every MDP whose reward means lie within
/// `reward_radius` of the centre and whose rows lie within L1 distance
/// `transition_radius` of the centre's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    pub center: TabularMDP,
    pub reward_radius: Vec<f64>,
    pub transition_radius: Vec<f64>,
    pub counts: Vec<u64>,
}

impl ConfidenceSet {
    pub fn new(center: TabularMDP, reward_radius: Vec<f64>, transition_radius: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        let n = center.n_pairs();
        if reward_radius.len() != n || transition_radius.len() != n || counts.len() != n {
            return Err(Error::Argument(format!("confidence set tables must have {n} entries")));
        }
        if reward_radius.iter().chain(&transition_radius).any(|&x| !(x >= 0.0)) {
            return Err(Error::Argument("confidence radii must be nonnegative".into()));
        }
        Ok(ConfidenceSet {
            center,
            reward_radius,
            transition_radius,
            counts,
        })
    }

    /// The degenerate set `{mdp}`.
    pub fn point(mdp: TabularMDP) -> Self {
        let n = mdp.n_pairs();
        ConfidenceSet {
            center: mdp,
            reward_radius: vec![0.0; n],
            transition_radius: vec![0.0; n],
            counts: vec![0; n],
        }
    }

    /// Whether `mdp` belongs to the set (within `tol`).
    pub fn contains(&self, mdp: &TabularMDP, tol: f64) -> bool {
        if !mdp.same_shape(&self.center) {
            return false;
        }
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        (0..ns).all(|s| {
            (0..na).all(|a| {
                let i = mdp.pair(s, a);
                let dr = (mdp.mean_reward(s, a) - self.center.mean_reward(s, a)).abs();
                let dp: f64 = mdp.row(s, a).iter().zip(self.center.row(s, a)).map(|(x, y)| (x - y).abs()).sum();
                dr <= self.reward_radius[i] + tol && dp <= self.transition_radius[i] + tol
            })
        })
    }
}

/// Builds a confidence set from history statistics at time `t`.
pub trait ConfidenceConstructor: Send + Sync {
    fn build(&self, stats: &VisitStats, t: u64) -> Result<ConfidenceSet>;
}

/// Hoeffding/Weissman radii with confidence parameter `delta`:
///
/// - transitions: `sqrt(14 S ln(2 A t / delta) / max(1, N))` in L1
/// - rewards: `sqrt(7 ln(2 S A t / delta) / (2 max(1, N)))`
///
/// Unvisited pairs are centred on a uniform row and zero reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingRadii {
    pub delta: f64,
}

impl HoeffdingRadii {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Argument(format!("delta {delta} outside (0, 1)")));
        }
        Ok(HoeffdingRadii { delta })
    }
}

impl ConfidenceConstructor for HoeffdingRadii {
    fn build(&self, stats: &VisitStats, t: u64) -> Result<ConfidenceSet> {
        let (ns, na) = (stats.n_states, stats.n_actions);
        let t = t.max(1) as f64;
        let (s_f, a_f) = (ns as f64, na as f64);
        let mut transitions = Vec::with_capacity(ns * na * ns);
        let mut rewards = Vec::with_capacity(ns * na);
        let mut rr = Vec::with_capacity(ns * na);
        let mut tr = Vec::with_capacity(ns * na);
        for i in 0..ns * na {
            let n = stats.visits[i];
            if n == 0 {
                transitions.extend(std::iter::repeat_n(1.0 / s_f, ns));
                rewards.push(RewardModel::PointMass(0.0));
            } else {
                let counts = &stats.transitions[i * ns..(i + 1) * ns];
                let mut row: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
                crate::mdp::normalize(&mut row);
                transitions.extend(row);
                rewards.push(RewardModel::PointMass((stats.reward_sums[i] / n as f64).clamp(0.0, 1.0)));
            }
            let nn = n.max(1) as f64;
            tr.push((14.0 * s_f * (2.0 * a_f * t / self.delta).ln() / nn).sqrt());
            rr.push((7.0 * (2.0 * s_f * a_f * t / self.delta).ln() / (2.0 * nn)).sqrt());
        }
        let center = TabularMDP::from_flat(ns, na, transitions, rewards)?;
        ConfidenceSet::new(center, rr, tr, stats.visits.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EviResult {
    pub optimistic_gain: f64,
    pub policy: StationaryPolicy,
    pub iterations: usize,
}

/// Default iteration budget for [`extended_value_iteration`].
pub const EVI_MAX_ITERATIONS: usize = 1_000_000;

/// Most favourable row in the L1 ball of radius `radius` around `center`:
/// add up to `radius / 2` mass to the best state and remove the excess from
/// the worst states first. `order` lists states by decreasing value.
pub fn optimistic_row(center: &[f64], radius: f64, order: &[usize], out: &mut [f64]) {
    out.copy_from_slice(center);
    let best = order[0];
    out[best] = (center[best] + radius / 2.0).min(1.0);
    let mut excess: f64 = out.iter().sum::<f64>() - 1.0;
    for &j in order.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if j == best {
            continue;
        }
        // Emptied entries are set to exactly zero so no rounding dust remains.
        if out[j] <= excess + 1e-15 {
            excess -= out[j];
            out[j] = 0.0;
        } else {
            out[j] -= excess;
            excess = 0.0;
        }
    }
}

/// Extended value iteration: optimistic gain and policy over `set`, stopping
/// when the span of successive value differences drops below `epsilon`.
pub fn extended_value_iteration(set: &ConfidenceSet, epsilon: f64, max_iterations: usize) -> Result<EviResult> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let m = &set.center;
    let (ns, na) = (m.n_states(), m.n_actions());
    let tau = APERIODICITY_WEIGHT;
    let rewards: Vec<f64> = (0..ns * na)
        .map(|i| (m.rewards_flat()[i].mean() + set.reward_radius[i]).min(1.0))
        .collect();
    let mut u: Vec<f64> = vec![0.0; ns];
    let mut next = vec![0.0; ns];
    let mut order: Vec<usize> = (0..ns).collect();
    let mut row = vec![0.0; ns];
    let mut actions = vec![0; ns];
    let mut span = f64::INFINITY;
    for it in 1..=max_iterations {
        order.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..na {
                let i = s * na + a;
                optimistic_row(m.row(s, a), set.transition_radius[i], &order, &mut row);
                let ev: f64 = row.iter().zip(&u).map(|(p, v)| p * v).sum();
                let q = rewards[i] + (1.0 - tau) * ev + tau * u[s];
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            next[s] = best;
            actions[s] = best_a;
        }
        let (lo, hi) = u.iter().zip(&next).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (o, v)| {
            let d = v - o;
            (lo.min(d), hi.max(d))
        });
        span = hi - lo;
        let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
        for (slot, v) in u.iter_mut().zip(&next) {
            *slot = v - shift;
        }
        if span < epsilon {
            return Ok(EviResult {
                optimistic_gain: 0.5 * (lo + hi),
                policy: StationaryPolicy::new(actions, na)?,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        span,
        advice: format!(
            "the extended MDP may be multichain; rows are already mixed with the identity at weight {APERIODICITY_WEIGHT}"
        ),
    })
}
