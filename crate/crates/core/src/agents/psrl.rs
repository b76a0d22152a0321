//! Posterior sampling agents.

use std::collections::HashMap;
use std::sync::Arc;

use log::warn;
use rand_chacha::ChaCha8Rng;

use super::{plan_stationary, Agent, EpisodePlan, EpisodeSignal};
use crate::belief::{Belief, Observation};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMDP};
use crate::planner::{backward_induction, OptimalGain, QTable};

/// Samples drawn by lazy PSRL before falling back to the posterior mean.
pub const MAX_PLAN_ATTEMPTS: usize = 10;

/// Atoms of a finite-support belief live as long as the belief, so their
/// addresses are stable cache keys. Conjugate samples are never cached.
fn cache_key(belief: &Belief, m: &Arc<TabularMDP>) -> Option<usize> {
    belief.as_finite_support().map(|_| Arc::as_ptr(m) as usize)
}

/// PSRL with fixed episodes of length `H`: sample, plan by backward
/// induction, follow the time policy for `H` steps.
///
/// On a continuing environment the episodes are artificial; the state is not
/// reset between them.
pub struct PsrlFixed {
    belief: Belief,
    horizon: usize,
    cache: HashMap<usize, (Arc<QTable>, Arc<Policy>)>,
}

impl PsrlFixed {
    pub fn new(belief: Belief, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Argument("psrl needs H >= 1".into()));
        }
        Ok(PsrlFixed {
            belief,
            horizon,
            cache: HashMap::new(),
        })
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }
}

impl Agent for PsrlFixed {
    fn name(&self) -> &'static str {
        "psrl"
    }

    fn signal(&self) -> EpisodeSignal {
        EpisodeSignal::FixedLength { h: self.horizon }
    }

    fn begin_episode(&mut self, _k: usize, _t: usize, state: usize, rng: &mut ChaCha8Rng) -> Result<EpisodePlan> {
        let m = self.belief.sample_mdp(rng);
        let key = cache_key(&self.belief, &m);
        let cached = key.and_then(|k| self.cache.get(&k).cloned());
        let (q, policy) = match cached {
            Some(hit) => hit,
            None => {
                let (q, pi) = backward_induction(&m, self.horizon)?;
                let entry = (Arc::new(q), Arc::new(Policy::Time(pi)));
                if let Some(k) = key {
                    self.cache.insert(k, entry.clone());
                }
                entry
            }
        };
        Ok(EpisodePlan {
            planned_value: q.value(0, state),
            sampled: Some(m),
            policy,
        })
    }

    fn observe(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Result<()> {
        self.belief.update(obs, rng)
    }
}

/// PSRL that keeps its sample until an episode signal fires, planning for
/// the average-reward criterion.
pub struct LazyPsrl {
    belief: Belief,
    signal: EpisodeSignal,
    cache: HashMap<usize, Arc<(OptimalGain, Vec<Arc<Policy>>)>>,
}

impl LazyPsrl {
    pub fn new(belief: Belief, signal: EpisodeSignal) -> Result<Self> {
        signal.validate()?;
        Ok(LazyPsrl {
            belief,
            signal,
            cache: HashMap::new(),
        })
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    fn plan(&mut self, m: &Arc<TabularMDP>) -> Result<Arc<(OptimalGain, Vec<Arc<Policy>>)>> {
        let key = cache_key(&self.belief, m);
        if let Some(hit) = key.and_then(|k| self.cache.get(&k)) {
            return Ok(Arc::clone(hit));
        }
        let opt = plan_stationary(m)?;
        let per_state = (0..m.n_states())
            .map(|s| Arc::new(Policy::Stationary(opt.policy_for(s).clone())))
            .collect();
        let entry = Arc::new((opt, per_state));
        if let Some(k) = key {
            self.cache.insert(k, Arc::clone(&entry));
        }
        Ok(entry)
    }
}

impl Agent for LazyPsrl {
    fn name(&self) -> &'static str {
        "lazy_psrl"
    }

    fn signal(&self) -> EpisodeSignal {
        self.signal
    }

    fn begin_episode(&mut self, k: usize, _t: usize, state: usize, rng: &mut ChaCha8Rng) -> Result<EpisodePlan> {
        let mut last_err = None;
        for _ in 0..MAX_PLAN_ATTEMPTS {
            let m = self.belief.sample_mdp(rng);
            match self.plan(&m) {
                Ok(entry) => {
                    return Ok(EpisodePlan {
                        planned_value: entry.0.gain.at(state),
                        policy: Arc::clone(&entry.1[state]),
                        sampled: Some(m),
                    })
                }
                Err(e) => {
                    warn!("episode {k}: planning on a sampled MDP failed ({e}); resampling");
                    last_err = Some(e);
                }
            }
        }
        warn!(
            "episode {k}: {MAX_PLAN_ATTEMPTS} samples failed to plan (last: {}); planning in the posterior mean",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        );
        let m = Arc::new(self.belief.posterior_mean());
        let opt = plan_stationary(&m)?;
        Ok(EpisodePlan {
            planned_value: opt.gain.at(state),
            policy: Arc::new(Policy::Stationary(opt.policy_for(state).clone())),
            sampled: Some(m),
        })
    }

    fn observe(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Result<()> {
        self.belief.update(obs, rng)
    }
}
