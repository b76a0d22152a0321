//! PSRL with a linearly smoothed model.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{plan_stationary, Agent, EpisodePlan, EpisodeSignal};
use crate::belief::{Belief, Observation};
use crate::error::{Error, Result};
use crate::mdp::{normalize, Policy, RewardModel, TabularMDP};
use crate::planner::OptimalGain;

/// The smoothed model is replanned once it has moved more than this (max
/// absolute entry difference) since the last plan.
pub const REPLAN_TOLERANCE: f64 = 1e-3;

/// Every step: draw `M_t` from the posterior, blend
/// `P̄_t = γ P̄_{t-1} + (1 - γ) P_t` (reward means likewise), and act
/// greedily for the average-reward optimum of `P̄_t`.
pub struct SmoothedPsrl {
    belief: Belief,
    gamma: f64,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    planned: Option<(Arc<TabularMDP>, Arc<OptimalGain>)>,
}

impl SmoothedPsrl {
    pub fn new(belief: Belief, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Argument(format!("gamma {gamma} outside (0, 1)")));
        }
        Ok(SmoothedPsrl {
            belief,
            gamma,
            transitions: Vec::new(),
            rewards: Vec::new(),
            planned: None,
        })
    }

    /// Current smoothed model, if any sample has been blended yet.
    pub fn smoothed(&self) -> Option<TabularMDP> {
        if self.rewards.is_empty() {
            return None;
        }
        Some(self.model())
    }

    fn model(&self) -> TabularMDP {
        let (ns, na) = (self.belief.n_states(), self.belief.n_actions());
        let rewards = self.rewards.iter().map(|&m| RewardModel::Bernoulli(m.clamp(0.0, 1.0))).collect();
        TabularMDP::from_flat(ns, na, self.transitions.clone(), rewards).expect("convex blend of stochastic rows")
    }

    fn blend(&mut self, sample: &TabularMDP) -> Result<()> {
        if self.rewards.is_empty() {
            self.transitions = sample.transitions_flat().to_vec();
            self.rewards = sample.rewards_flat().iter().map(RewardModel::mean).collect();
            return Ok(());
        }
        let g = self.gamma;
        let ns = sample.n_states();
        let bound = 2.0 * (1.0 - g) + 1e-12;
        for (old, new) in self.transitions.chunks_exact_mut(ns).zip(sample.transitions_flat().chunks_exact(ns)) {
            let mut moved = 0.0;
            for (o, n) in old.iter_mut().zip(new) {
                let b = g * *o + (1.0 - g) * n;
                moved += (b - *o).abs();
                *o = b;
            }
            normalize(old);
            if moved > bound {
                return Err(Error::Numerical(format!(
                    "smoothed row moved {moved} in L1, more than 2(1 - gamma) = {bound}"
                )));
            }
        }
        for (o, r) in self.rewards.iter_mut().zip(sample.rewards_flat()) {
            *o = g * *o + (1.0 - g) * r.mean();
        }
        Ok(())
    }
}

impl Agent for SmoothedPsrl {
    fn name(&self) -> &'static str {
        "smoothed_psrl"
    }

    fn signal(&self) -> EpisodeSignal {
        EpisodeSignal::FixedLength { h: 1 }
    }

    fn begin_episode(&mut self, _k: usize, _t: usize, state: usize, rng: &mut ChaCha8Rng) -> Result<EpisodePlan> {
        let sample = self.belief.sample_mdp(rng);
        self.blend(&sample)?;
        let current = self.model();
        let stale = match &self.planned {
            Some((m, _)) => m.max_abs_diff(&current) > REPLAN_TOLERANCE,
            None => true,
        };
        if stale {
            let opt = plan_stationary(&current)?;
            self.planned = Some((Arc::new(current), Arc::new(opt)));
        }
        let (m, opt) = self.planned.as_ref().expect("planned above");
        Ok(EpisodePlan {
            sampled: Some(Arc::clone(m)),
            policy: Arc::new(Policy::Stationary(opt.policy_for(state).clone())),
            planned_value: opt.gain.at(state),
        })
    }

    fn observe(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Result<()> {
        self.belief.update(obs, rng)
    }
}
