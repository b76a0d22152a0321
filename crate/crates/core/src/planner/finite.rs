//! Finite-horizon dynamic programming.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{FiniteHorizonMDP, TabularMDP, TimePolicy};

/// State-action values for each period of an episode.
///
/// Periods are zero-based: `h = 0` is the first step of the episode and
/// `value(horizon, s) = 0` is the terminal boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QTable {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    /// `[(h * S + s) * A + a]` for `h < horizon`.
    q: Vec<f64>,
    /// `[h * S + s]` for `h <= horizon`.
    v: Vec<f64>,
}

impl QTable {
    fn zeros(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        QTable {
            horizon,
            n_states,
            n_actions,
            q: vec![0.0; horizon * n_states * n_actions],
            v: vec![0.0; (horizon + 1) * n_states],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.n_states + s) * self.n_actions + a]
    }

    /// Value of the policy the table was built for (the greedy policy for
    /// [`backward_induction`]).
    #[inline]
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.n_states + s]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
}

#[inline]
fn expected_next(row: &[f64], v_next: &[f64]) -> f64 {
    row.iter().zip(v_next).map(|(p, v)| p * v).sum()
}

/// Optimal Q-values and a greedy time policy for `horizon` steps of `mdp`
/// (ties go to the lowest action).
pub fn backward_induction(mdp: &TabularMDP, horizon: usize) -> Result<(QTable, TimePolicy)> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut table = QTable::zeros(horizon, ns, na);
    let mut actions = vec![0; horizon * ns];
    for h in (0..horizon).rev() {
        let (head, tail) = table.v.split_at_mut((h + 1) * ns);
        let v_next = &tail[..ns];
        let v_here = &mut head[h * ns..];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..na {
                let q = mdp.mean_reward(s, a) + expected_next(mdp.row(s, a), v_next);
                table.q[(h * ns + s) * na + a] = q;
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            v_here[s] = best;
            actions[h * ns + s] = best_a;
        }
    }
    let policy = TimePolicy::new(horizon, ns, actions, na)?;
    Ok((table, policy))
}

/// [`backward_induction`] over the horizon of a finite-horizon MDP.
pub fn plan_finite_horizon(fh: &FiniteHorizonMDP) -> Result<(QTable, TimePolicy)> {
    backward_induction(fh.base(), fh.horizon())
}

/// Q-values of a fixed time policy: the same recursion with the next action
/// pinned to `policy(s', h + 1)`.
pub fn policy_value_finite(mdp: &TabularMDP, policy: &TimePolicy) -> Result<QTable> {
    if policy.n_states() != mdp.n_states() {
        return Err(Error::Argument("policy and MDP disagree on n_states".into()));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let horizon = policy.horizon();
    let mut table = QTable::zeros(horizon, ns, na);
    for h in (0..horizon).rev() {
        let (head, tail) = table.v.split_at_mut((h + 1) * ns);
        let v_next = &tail[..ns];
        let v_here = &mut head[h * ns..];
        for s in 0..ns {
            for a in 0..na {
                table.q[(h * ns + s) * na + a] = mdp.mean_reward(s, a) + expected_next(mdp.row(s, a), v_next);
            }
            let a = policy.action(s, h);
            if a >= na {
                return Err(Error::Argument(format!("policy action {a} out of range")));
            }
            v_here[s] = table.q[(h * ns + s) * na + a];
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{heaven_hell, two_point_bandit, RewardModel};

    #[test]
    fn sum_of_ones() {
        let (q, pi) = backward_induction(&two_point_bandit(1.0).unwrap(), 3).unwrap();
        assert_eq!(q.value(0, 0), 3.0);
        assert_eq!(q.value(3, 0), 0.0);
        assert_eq!(pi.action(0, 0), 0);
    }

    #[test]
    fn heaven_hell_without_arrival_reward() {
        // One transition step, then three steps in heaven.
        let m = heaven_hell(1, false).unwrap();
        let (q, pi) = backward_induction(&m, 4).unwrap();
        assert_eq!(q.value(0, 0), 3.0);
        assert_eq!(pi.action(0, 0), 0);
        let hell = TimePolicy::new(4, 3, vec![1; 12], 2).unwrap();
        assert_eq!(policy_value_finite(&m, &hell).unwrap().value(0, 0), 0.0);
    }

    #[test]
    fn heaven_hell_with_arrival_reward() {
        let m = heaven_hell(2, true).unwrap();
        let (q, pi) = backward_induction(&m, 4).unwrap();
        assert_eq!(q.value(0, 0), 4.0);
        assert_eq!(pi.action(0, 0), 1);
    }

    #[test]
    fn optimal_policy_reproduces_its_values() {
        let m = crate::mdp::chain(4, 0.005, 1.0).unwrap();
        let (q, pi) = backward_induction(&m, 6).unwrap();
        let q_pi = policy_value_finite(&m, &pi).unwrap();
        assert_eq!(q, q_pi);
    }

    #[test]
    fn zero_reward_is_zero() {
        let m = TabularMDP::from_flat(2, 2, vec![0.5; 8], vec![RewardModel::PointMass(0.0); 4]).unwrap();
        let pi = TimePolicy::new(3, 2, vec![1, 0, 0, 1, 1, 1], 2).unwrap();
        let q = policy_value_finite(&m, &pi).unwrap();
        for h in 0..=3 {
            for s in 0..2 {
                assert_eq!(q.value(h, s), 0.0);
            }
        }
    }
}
