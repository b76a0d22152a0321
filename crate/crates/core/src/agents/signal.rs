//! Episode signals: when to stop following the current policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpisodeSignal {
    /// Fires every `H` steps.
    FixedLength {
        #[serde(rename = "H")]
        h: usize,
    },
    /// Fires once some pair's within-episode visits reach
    /// `max(1, visits before the episode)`.
    VisitCountDoubling,
    /// Fires once the episode's cumulative reward reaches `threshold` or its
    /// length reaches `H_max`.
    RewardThreshold {
        threshold: f64,
        #[serde(rename = "H_max")]
        h_max: usize,
    },
    Never,
}

impl EpisodeSignal {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EpisodeSignal::FixedLength { h: 0 } => Err(Error::Argument("FixedLength needs H >= 1".into())),
            EpisodeSignal::RewardThreshold { h_max: 0, .. } => {
                Err(Error::Argument("RewardThreshold needs H_max >= 1".into()))
            }
            EpisodeSignal::RewardThreshold { threshold, .. } if !threshold.is_finite() => {
                Err(Error::Argument("RewardThreshold threshold must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// What a signal may look at: the current episode so far plus the visit
/// counts at its start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeStats {
    n_actions: usize,
    /// Steps taken in the current episode.
    pub elapsed: usize,
    /// Cumulative reward in the current episode.
    pub reward: f64,
    /// `N(s, a)` at the episode start.
    pub visits_before: Vec<u64>,
    /// `N(s, a)` counted since the episode start.
    pub visits_within: Vec<u64>,
}

impl EpisodeStats {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        EpisodeStats {
            n_actions,
            elapsed: 0,
            reward: 0.0,
            visits_before: vec![0; n_states * n_actions],
            visits_within: vec![0; n_states * n_actions],
        }
    }

    pub fn record(&mut self, s: usize, a: usize, r: f64) {
        self.elapsed += 1;
        self.reward += r;
        self.visits_within[s * self.n_actions + a] += 1;
    }

    /// Folds the finished episode into the history counts.
    pub fn start_episode(&mut self) {
        for (b, w) in self.visits_before.iter_mut().zip(&mut self.visits_within) {
            *b += *w;
            *w = 0;
        }
        self.elapsed = 0;
        self.reward = 0.0;
    }
}

/// Whether `signal` ends the episode after the steps summarised in `stats`.
pub fn signal_eval(signal: &EpisodeSignal, stats: &EpisodeStats) -> bool {
    match *signal {
        EpisodeSignal::FixedLength { h } => stats.elapsed >= h,
        EpisodeSignal::VisitCountDoubling => stats
            .visits_within
            .iter()
            .zip(&stats.visits_before)
            .any(|(&w, &b)| w > 0 && w >= b.max(1)),
        EpisodeSignal::RewardThreshold { threshold, h_max } => stats.reward >= threshold || stats.elapsed >= h_max,
        EpisodeSignal::Never => false,
    }
}
