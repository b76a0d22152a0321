//! Optimism in the face of uncertainty.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{Agent, EpisodePlan, EpisodeSignal};
use crate::belief::Observation;
use crate::error::Result;
use crate::mdp::Policy;
use crate::planner::{extended_value_iteration, ConfidenceConstructor, VisitStats, EVI_MAX_ITERATIONS};

/// Builds a confidence set from the history at each episode start and
/// follows the extended-value-iteration policy until the signal fires.
/// EVI runs to accuracy `1 / sqrt(t)`.
pub struct OfuRl {
    constructor: Box<dyn ConfidenceConstructor>,
    signal: EpisodeSignal,
    stats: VisitStats,
}

impl OfuRl {
    pub fn new(
        constructor: Box<dyn ConfidenceConstructor>,
        signal: EpisodeSignal,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self> {
        signal.validate()?;
        Ok(OfuRl {
            constructor,
            signal,
            stats: VisitStats::new(n_states, n_actions),
        })
    }
}

impl Agent for OfuRl {
    fn name(&self) -> &'static str {
        "ofu"
    }

    fn signal(&self) -> EpisodeSignal {
        self.signal
    }

    fn begin_episode(&mut self, _k: usize, t: usize, _state: usize, _rng: &mut ChaCha8Rng) -> Result<EpisodePlan> {
        let set = self.constructor.build(&self.stats, t as u64)?;
        let res = extended_value_iteration(&set, 1.0 / (t as f64).sqrt(), EVI_MAX_ITERATIONS)?;
        Ok(EpisodePlan {
            sampled: None,
            policy: Arc::new(Policy::Stationary(res.policy)),
            planned_value: res.optimistic_gain,
        })
    }

    fn observe(&mut self, obs: &Observation, _rng: &mut ChaCha8Rng) -> Result<()> {
        self.stats.record(obs.state, obs.action, obs.reward, obs.next_state);
        Ok(())
    }
}
