//! Empirical check of the posterior-sampling identity: conditional on the
//! history at an episode start, the sampled MDP and the true MDP have the
//! same distribution.
//!
//! Replications draw `M*` from the prior, run an agent, and record `g(M*)`
//! and `g(M_k)` for episode `k`. Samples are stratified by the exact history
//! before episode `k`; a chi-square test on binned `g` compares the two
//! within each stratum and the statistics are summed. An optional condition
//! restricts to replications where a later, data-dependent event happened,
//! which is not measurable with respect to that history.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::config::{parse_json, PriorSpec};
use super::experiment::SeedStreams;
use crate::agents::{run_agent, AgentSpec};
use crate::error::{Error, Result};
use crate::mdp::{Model, TabularMDP, DEFAULT_POLICY_CAP};
use crate::planner::optimal_gain_brute_force;

/// Smallest stratum the chi-square approximation is trusted on.
pub const MIN_STRATUM: usize = 30;

/// Smallest number of replications accepted.
pub const MIN_REPLICATIONS: usize = 1000;

/// Bins for `g` under priors with continuous support.
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Functional {
    /// Optimal gain from the start state.
    Gain,
    MeanReward { state: usize, action: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Condition {
    /// Keep replications in which episode `episode` starts at or before `t`.
    EpisodeStartsBy { episode: usize, t: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub prior: PriorSpec,
    pub agent: AgentSpec,
    #[serde(rename = "T")]
    pub t: usize,
    /// Episode whose sample is compared with the truth (one-based).
    #[serde(default = "first")]
    pub episode: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
    #[serde(default = "gain_functional")]
    pub g: Functional,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start_state: usize,
}

fn first() -> usize {
    1
}

fn gain_functional() -> Functional {
    Functional::Gain
}

impl LemmaConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: LemmaConfig = parse_json(text)?;
        cfg.agent.validate("agent")?;
        if cfg.t == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        if cfg.episode == 0 {
            return Err(Error::config("episode", "episodes are numbered from 1"));
        }
        if cfg.bins == Some(0) {
            return Err(Error::config("bins", "must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n_replications: usize,
    /// Replications that reached the episode and satisfied the condition.
    pub n_used: usize,
    pub n_strata: usize,
    pub mean_g_true: f64,
    pub mean_g_sampled: f64,
    /// Mean of `g(M_k) - g(M*)` over used replications.
    pub mean_difference: f64,
    pub se_difference: f64,
}

fn evaluate(g: Functional, m: &TabularMDP, s: usize) -> Result<f64> {
    match g {
        Functional::Gain => Ok(optimal_gain_brute_force(m, DEFAULT_POLICY_CAP)?.gain.at(s)),
        Functional::MeanReward { state, action } => {
            m.check_state(state)?;
            m.check_action(action)?;
            Ok(m.mean_reward(state, action))
        }
    }
}

type Sample = (Vec<u64>, f64, f64);

pub fn lemma1_check(cfg: &LemmaConfig, n: usize) -> Result<LemmaReport> {
    if n < MIN_REPLICATIONS {
        return Err(Error::Argument(format!("need at least {MIN_REPLICATIONS} replications, got {n}")));
    }
    let prior = cfg.prior.build()?;
    if cfg.start_state >= prior.n_states() {
        return Err(Error::config("start_state", "out of range"));
    }
    let finite = prior.as_finite_support().is_some();
    // g on prior atoms, keyed by address; atoms are shared with every clone
    // of the prior.
    let atom_g: HashMap<usize, f64> = match prior.as_finite_support() {
        Some(fs) => fs
            .atoms()
            .iter()
            .map(|m| Ok((Arc::as_ptr(m) as usize, evaluate(cfg.g, m, cfg.start_state)?)))
            .collect::<Result<_>>()?,
        None => HashMap::new(),
    };
    let g_of = |m: &Arc<TabularMDP>| -> Result<f64> {
        match atom_g.get(&(Arc::as_ptr(m) as usize)) {
            Some(&v) if finite => Ok(v),
            _ => evaluate(cfg.g, m, cfg.start_state),
        }
    };

    let samples: Vec<Result<Option<Sample>>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeedStreams::new(cfg.seed.wrapping_add(i));
            let truth = prior.sample_mdp(&mut rng.prior);
            let model = Model::Continuing((*truth).clone());
            let mut agent = cfg.agent.build(prior.clone())?;
            let out = run_agent(agent.as_mut(), &model, cfg.start_state, cfg.t, &mut rng.env, &mut rng.agent)?;
            let Some(log) = out.episodes.get(cfg.episode - 1) else {
                return Ok(None);
            };
            if let Some(Condition::EpisodeStartsBy { episode, t }) = cfg.condition {
                let hit = out.episodes.get(episode.saturating_sub(1)).is_some_and(|e| e.start_t <= t);
                if !hit {
                    return Ok(None);
                }
            }
            let sampled = log
                .sampled
                .as_ref()
                .ok_or_else(|| Error::Contract("the agent does not log a sampled MDP".into()))?;
            let mut key = vec![log.start_state as u64];
            for st in &out.trajectory.steps[..log.start_t - 1] {
                key.extend([st.state as u64, st.action as u64, st.reward.to_bits(), st.next_state as u64]);
            }
            Ok(Some((key, g_of(&truth)?, g_of(sampled)?)))
        })
        .collect();

    let bins = cfg.bins.unwrap_or(DEFAULT_BINS);
    let bin = |x: f64| -> i64 {
        if finite {
            (x * 1e9).round() as i64
        } else {
            ((x.clamp(0.0, 1.0) * bins as f64) as i64).min(bins as i64 - 1)
        }
    };
    let mut strata: BTreeMap<Vec<u64>, Vec<(f64, f64)>> = BTreeMap::new();
    let (mut sum_t, mut sum_k, mut sum_d, mut sum_d2) = (0.0, 0.0, 0.0, 0.0);
    let mut used = 0usize;
    for s in samples {
        if let Some((key, gt, gk)) = s? {
            strata.entry(key).or_default().push((gt, gk));
            used += 1;
            sum_t += gt;
            sum_k += gk;
            sum_d += gk - gt;
            sum_d2 += (gk - gt) * (gk - gt);
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData("no replication reached the requested episode".into()));
    }
    let mut statistic = 0.0;
    let mut dof = 0usize;
    for (key, pairs) in &strata {
        if pairs.len() < MIN_STRATUM {
            return Err(Error::InsufficientData(format!(
                "history stratum of length {} has {} samples (< {MIN_STRATUM})",
                (key.len() - 1) / 4,
                pairs.len()
            )));
        }
        let mut table: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for &(gt, gk) in pairs {
            table.entry(bin(gt)).or_default().0 += 1.0;
            table.entry(bin(gk)).or_default().1 += 1.0;
        }
        for &(a, b) in table.values() {
            let e = 0.5 * (a + b);
            statistic += (a - e) * (a - e) / e + (b - e) * (b - e) / e;
        }
        dof += table.len() - 1;
    }
    let p_value = if dof == 0 {
        statistic = 0.0;
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::Numerical(format!("chi-square: {e}")))?
            .sf(statistic)
    };
    let nf = used as f64;
    let mean_d = sum_d / nf;
    let var_d = if used > 1 { ((sum_d2 - nf * mean_d * mean_d) / (nf - 1.0)).max(0.0) } else { 0.0 };
    Ok(LemmaReport {
        statistic,
        dof,
        p_value,
        n_replications: n,
        n_used: used,
        n_strata: strata.len(),
        mean_g_true: sum_t / nf,
        mean_g_sampled: sum_k / nf,
        mean_difference: mean_d,
        se_difference: (var_d / nf).sqrt(),
    })
}
