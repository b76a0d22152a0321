//! Learning agents and the loop that runs them.
//!
//! Every agent plans once per episode and follows that plan until its
//! [`EpisodeSignal`] fires. The runner owns the signal bookkeeping so that
//! episode boundaries can be replayed from a trajectory alone.

mod ofu;
mod psrl;
mod signal;
mod smoothed;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ofu::OfuRl;
pub use psrl::{LazyPsrl, PsrlFixed, MAX_PLAN_ATTEMPTS};
pub use signal::{signal_eval, EpisodeSignal, EpisodeStats};
pub use smoothed::{SmoothedPsrl, REPLAN_TOLERANCE};

use crate::belief::{Belief, Observation};
use crate::error::{Error, Result};
use crate::mdp::{step_unchecked, Model, Policy, Step, TabularMDP, Trajectory};
use crate::planner::{
    optimal_gain_brute_force, relative_value_iteration, OptimalGain, RviOptions,
};
use crate::mdp::policy_count;

/// Stationary planning enumerates policies up to this many, else runs
/// relative value iteration.
pub const BRUTE_FORCE_CAP: u128 = 1 << 12;

/// What an agent decided at the start of an episode.
#[derive(Debug, Clone)]
pub struct EpisodePlan {
    /// The MDP planned in (`M_k`), when there is a single one.
    pub sampled: Option<Arc<TabularMDP>>,
    pub policy: Arc<Policy>,
    /// Value of `policy` in the planning model from the episode start state:
    /// `V_1` for finite-horizon plans, the gain otherwise.
    pub planned_value: f64,
}

pub trait Agent: Send {
    fn name(&self) -> &'static str;
    fn signal(&self) -> EpisodeSignal;
    /// Plans episode `k` (one-based) starting at time `t` in `state`.
    fn begin_episode(&mut self, k: usize, t: usize, state: usize, rng: &mut ChaCha8Rng) -> Result<EpisodePlan>;
    fn observe(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Result<()>;
}

/// Per-episode record kept by the runner.
#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub k: usize,
    /// One-based start time.
    pub start_t: usize,
    pub start_state: usize,
    pub length: usize,
    pub sampled: Option<Arc<TabularMDP>>,
    pub policy: Arc<Policy>,
    pub planned_value: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub episodes: Vec<EpisodeLog>,
}

/// Runs `agent` for `t_max` steps from `s1`.
///
/// Environment draws come from `env_rng` and agent draws from `agent_rng`,
/// so a fixed environment stream can be replayed under different agents.
/// Episodic models redraw the state from their initial distribution every
/// `horizon` steps, independently of the agent's episodes.
pub fn run_agent(
    agent: &mut dyn Agent,
    model: &Model,
    s1: usize,
    t_max: usize,
    env_rng: &mut ChaCha8Rng,
    agent_rng: &mut ChaCha8Rng,
) -> Result<RunOutput> {
    if t_max == 0 {
        return Err(Error::Argument("T must be at least 1".into()));
    }
    let mdp = model.mdp();
    mdp.check_state(s1)?;
    let signal = agent.signal();
    signal.validate()?;
    let reset = model.horizon();
    let mut traj = Trajectory::new(s1, reset);
    traj.steps.reserve(t_max);
    let mut episodes: Vec<EpisodeLog> = Vec::new();
    let mut stats = EpisodeStats::new(mdp.n_states(), mdp.n_actions());
    let mut s = s1;
    let mut plan: Option<EpisodePlan> = None;
    for t in 1..=t_max {
        let current = match plan.as_ref() {
            Some(p) => p,
            None => {
                stats.start_episode();
                let k = episodes.len() + 1;
                let p = agent.begin_episode(k, t, s, agent_rng)?;
                episodes.push(EpisodeLog {
                    k,
                    start_t: t,
                    start_state: s,
                    length: 0,
                    sampled: p.sampled.clone(),
                    policy: Arc::clone(&p.policy),
                    planned_value: p.planned_value,
                });
                traj.episode_starts.push(t);
                plan.insert(p)
            }
        };
        let a = current.policy.action(s, stats.elapsed);
        mdp.check_action(a)?;
        let (r, next) = step_unchecked(mdp, s, a, env_rng);
        traj.steps.push(Step {
            state: s,
            action: a,
            reward: r,
            next_state: next,
        });
        stats.record(s, a, r);
        episodes.last_mut().expect("episode open").length += 1;
        agent.observe(
            &Observation {
                state: s,
                action: a,
                reward: r,
                next_state: next,
            },
            agent_rng,
        )?;
        if signal_eval(&signal, &stats) {
            plan = None;
        }
        s = match (reset, model) {
            (Some(h), Model::Episodic(fh)) if t % h == 0 => fh.sample_initial(env_rng),
            _ => next,
        };
    }
    Ok(RunOutput {
        trajectory: traj,
        episodes,
    })
}

/// Recomputes episode starts from a trajectory by evaluating `signal` after
/// every step, exactly as the runner does.
pub fn replay_boundaries(traj: &Trajectory, signal: &EpisodeSignal, n_states: usize, n_actions: usize) -> Vec<usize> {
    let mut stats = EpisodeStats::new(n_states, n_actions);
    let mut starts = Vec::new();
    let mut open = false;
    for (i, st) in traj.steps.iter().enumerate() {
        if !open {
            stats.start_episode();
            starts.push(i + 1);
            open = true;
        }
        stats.record(st.state, st.action, st.reward);
        if signal_eval(signal, &stats) {
            open = false;
        }
    }
    starts
}

/// Optimal stationary plan: brute force at desk scale, else relative value
/// iteration.
pub(crate) fn plan_stationary(mdp: &TabularMDP) -> Result<OptimalGain> {
    if policy_count(mdp.n_states(), mdp.n_actions()) <= BRUTE_FORCE_CAP {
        optimal_gain_brute_force(mdp, BRUTE_FORCE_CAP)
    } else {
        relative_value_iteration(mdp, RviOptions::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Psrl,
    LazyPsrl,
    Ofu,
    SmoothedPsrl,
}

/// Agent block of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub agent: AgentKind,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<EpisodeSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Default confidence parameter of the optimistic agent.
pub const DEFAULT_DELTA: f64 = 0.05;

impl AgentSpec {
    pub fn kind(kind: AgentKind) -> Self {
        AgentSpec {
            agent: kind,
            h: None,
            signal: None,
            gamma: None,
            delta: None,
        }
    }

    /// Checks the fields that apply to the chosen agent; `path` prefixes
    /// error locations.
    pub fn validate(&self, path: &str) -> Result<()> {
        let unused = |field: &str, set: bool| -> Result<()> {
            if set {
                Err(Error::config(format!("{path}.{field}"), format!("not used by agent {:?}", self.agent)))
            } else {
                Ok(())
            }
        };
        match self.agent {
            AgentKind::Psrl => {
                match self.h {
                    Some(h) if h >= 1 => {}
                    _ => return Err(Error::config(format!("{path}.H"), "psrl needs H >= 1")),
                }
                unused("signal", self.signal.is_some())?;
                unused("gamma", self.gamma.is_some())?;
                unused("delta", self.delta.is_some())?;
            }
            AgentKind::LazyPsrl => {
                let Some(sig) = self.signal else {
                    return Err(Error::config(format!("{path}.signal"), "lazy_psrl needs a signal"));
                };
                sig.validate().map_err(|e| Error::config(format!("{path}.signal"), e.to_string()))?;
                unused("H", self.h.is_some())?;
                unused("gamma", self.gamma.is_some())?;
                unused("delta", self.delta.is_some())?;
            }
            AgentKind::Ofu => {
                if let Some(sig) = self.signal {
                    sig.validate().map_err(|e| Error::config(format!("{path}.signal"), e.to_string()))?;
                }
                let d = self.delta.unwrap_or(DEFAULT_DELTA);
                if !(d > 0.0 && d < 1.0) {
                    return Err(Error::config(format!("{path}.delta"), "delta must lie in (0, 1)"));
                }
                unused("H", self.h.is_some())?;
                unused("gamma", self.gamma.is_some())?;
            }
            AgentKind::SmoothedPsrl => {
                match self.gamma {
                    Some(g) if g > 0.0 && g < 1.0 => {}
                    _ => return Err(Error::config(format!("{path}.gamma"), "smoothed_psrl needs gamma in (0, 1)")),
                }
                unused("H", self.h.is_some())?;
                unused("signal", self.signal.is_some())?;
                unused("delta", self.delta.is_some())?;
            }
        }
        Ok(())
    }

    /// Builds the agent. `belief` is the agent's prior (ignored by OFU).
    pub fn build(&self, belief: Belief) -> Result<Box<dyn Agent>> {
        self.validate("agent")?;
        Ok(match self.agent {
            AgentKind::Psrl => Box::new(PsrlFixed::new(belief, self.h.expect("validated"))?),
            AgentKind::LazyPsrl => Box::new(LazyPsrl::new(belief, self.signal.expect("validated"))?),
            AgentKind::Ofu => {
                let (ns, na) = (belief.n_states(), belief.n_actions());
                let ctor = crate::planner::HoeffdingRadii::new(self.delta.unwrap_or(DEFAULT_DELTA))?;
                Box::new(OfuRl::new(
                    Box::new(ctor),
                    self.signal.unwrap_or(EpisodeSignal::VisitCountDoubling),
                    ns,
                    na,
                )?)
            }
            AgentKind::SmoothedPsrl => Box::new(SmoothedPsrl::new(belief, self.gamma.expect("validated"))?),
        })
    }
}
