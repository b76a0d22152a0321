//! Exact expectations by enumeration for finite-support priors over
//! deterministic MDPs.
//!
//! With deterministic atoms the trajectory is a function of the true atom and
//! the atoms sampled at each episode start, so the expectation is a finite
//! sum over a tree whose branching happens only at episode starts. The
//! posterior typically collapses after a few steps, keeping the tree thin.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{signal_eval, EpisodeSignal, EpisodeStats};
use crate::belief::FiniteSupportBelief;
use crate::error::{Error, Result};
use crate::mdp::{heaven_hell, two_point_bandit, TabularMDP};
use crate::planner::{optimal_gain_brute_force, OptimalGain};

/// Episode-start nodes visited before giving up.
pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactExpectation {
    /// `E[sum_t (λ** - λ^{k(t)}_{k(t)})]`.
    pub optimism: f64,
    /// `E[sum_t (λ** - r_t)]`.
    pub regret: f64,
    /// Episode-start nodes enumerated.
    pub nodes: usize,
}

struct Node {
    prob: f64,
    t: usize,
    state: usize,
    weights: Vec<f64>,
    stats: EpisodeStats,
}

fn deterministic_next(m: &TabularMDP, s: usize, a: usize) -> usize {
    m.row(s, a).iter().position(|&p| p == 1.0).expect("checked deterministic")
}

/// Exact expected optimism sum and regret over `T` steps of lazy PSRL with
/// `signal`, when the true MDP is drawn from `prior` and the run starts in
/// `s1`. Every atom must have point-mass rewards and 0/1 transitions.
pub fn exact_lazy_psrl(
    prior: &FiniteSupportBelief,
    signal: EpisodeSignal,
    s1: usize,
    t_max: usize,
    node_budget: usize,
) -> Result<ExactExpectation> {
    signal.validate()?;
    if t_max == 0 {
        return Err(Error::Argument("T must be at least 1".into()));
    }
    let atoms: &[Arc<TabularMDP>] = prior.atoms();
    let (ns, na) = (atoms[0].n_states(), atoms[0].n_actions());
    if s1 >= ns {
        return Err(Error::Argument(format!("start state {s1} out of range")));
    }
    for (i, m) in atoms.iter().enumerate() {
        let det_rows = m.transitions_flat().iter().all(|&p| p == 0.0 || p == 1.0);
        let det_rewards = m.rewards_flat().iter().all(|r| matches!(r, crate::mdp::RewardModel::PointMass(_)));
        if !det_rows || !det_rewards {
            return Err(Error::Argument(format!("atom {i} is not deterministic")));
        }
    }
    let plans: Vec<OptimalGain> = atoms
        .iter()
        .map(|m| optimal_gain_brute_force(m, crate::mdp::DEFAULT_POLICY_CAP))
        .collect::<Result<_>>()?;

    let mut optimism = 0.0;
    let mut regret = 0.0;
    let mut nodes = 0usize;
    for (truth_idx, &w) in prior.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let truth = &atoms[truth_idx];
        let lambda_ss = plans[truth_idx].gain.at(s1);
        let mut stack = vec![Node {
            prob: w,
            t: 1,
            state: s1,
            weights: prior.weights().to_vec(),
            stats: EpisodeStats::new(ns, na),
        }];
        while let Some(node) = stack.pop() {
            for (j, &wj) in node.weights.iter().enumerate() {
                if wj == 0.0 {
                    continue;
                }
                nodes += 1;
                if nodes > node_budget {
                    return Err(Error::Argument(format!(
                        "enumeration exceeded {node_budget} episode nodes; the posterior does not collapse fast enough"
                    )));
                }
                let prob = node.prob * wj;
                let policy = plans[j].policy_for(node.state);
                let lambda_k = plans[j].gain.at(node.state);
                let mut weights = node.weights.clone();
                let mut stats = node.stats.clone();
                stats.start_episode();
                let (mut t, mut s) = (node.t, node.state);
                let (mut opt_acc, mut reg_acc) = (0.0, 0.0);
                let mut ended = false;
                while t <= t_max {
                    let a = policy.action(s);
                    let r = truth.mean_reward(s, a);
                    let next = deterministic_next(truth, s, a);
                    opt_acc += lambda_ss - lambda_k;
                    reg_acc += lambda_ss - r;
                    // Deterministic atoms give 0/1 likelihoods.
                    let mut total = 0.0;
                    for (wi, m) in weights.iter_mut().zip(atoms) {
                        if *wi != 0.0 {
                            *wi *= m.reward(s, a).likelihood(r) * m.row(s, a)[next];
                            total += *wi;
                        }
                    }
                    for wi in &mut weights {
                        *wi /= total;
                    }
                    stats.record(s, a, r);
                    t += 1;
                    s = next;
                    if signal_eval(&signal, &stats) {
                        ended = true;
                        break;
                    }
                }
                optimism += prob * opt_acc;
                regret += prob * reg_acc;
                if ended && t <= t_max {
                    stack.push(Node {
                        prob,
                        t,
                        state: s,
                        weights,
                        stats,
                    });
                }
            }
        }
    }
    Ok(ExactExpectation { optimism, regret, nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleValue {
    /// `sum_t E[λ** - λ^{k(t)}_{k(t)}]` as written.
    pub signed: f64,
    pub absolute: f64,
}

/// Lazy PSRL with `RewardThreshold(1, H_max)` on the two-point bandit
/// whose reward is 1 with prior probability `p`.
pub fn exact_counterexample(h_max: usize, t_max: usize, p: f64) -> Result<CounterexampleValue> {
    if h_max < 2 {
        return Err(Error::Argument(format!("H_max must exceed 1, got {h_max}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("p {p} outside [0, 1]")));
    }
    let prior = FiniteSupportBelief::new(
        vec![Arc::new(two_point_bandit(0.0)?), Arc::new(two_point_bandit(1.0)?)],
        vec![1.0 - p, p],
    )?;
    let signal = EpisodeSignal::RewardThreshold { threshold: 1.0, h_max };
    let e = exact_lazy_psrl(&prior, signal, 0, t_max, DEFAULT_NODE_BUDGET)?;
    Ok(CounterexampleValue {
        signed: e.optimism,
        absolute: e.optimism.abs(),
    })
}

/// Bayesian expected regret of PSRL from `s0` when heaven is state 1 with
/// probability `p` (arrival-reward convention). The first action decides
/// everything, so one-step episodes suffice.
pub fn exact_heaven_hell(t_max: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("p {p} outside [0, 1]")));
    }
    let prior = FiniteSupportBelief::new(
        vec![Arc::new(heaven_hell(1, true)?), Arc::new(heaven_hell(2, true)?)],
        vec![p, 1.0 - p],
    )?;
    let e = exact_lazy_psrl(&prior, EpisodeSignal::FixedLength { h: 1 }, 0, t_max, DEFAULT_NODE_BUDGET)?;
    Ok(e.regret)
}
