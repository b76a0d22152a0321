//! Seeded Monte Carlo experiments.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Environment, ExperimentConfig};
use super::regret::{decompose_finite, decompose_gain, regret_curve, Decomposition, EpisodeRecord, RegretReport};
use crate::agents::{run_agent, AgentKind, RunOutput};
use crate::error::{Error, Result};
use crate::mdp::{policy_count, Model, DEFAULT_POLICY_CAP};
use crate::planner::{backward_induction, optimal_gain_brute_force, relative_value_iteration, RviOptions};

/// Seeds handed to the thread pool at a time. Results are folded in seed
/// order, so output does not depend on the number of threads.
const CHUNK: usize = 512;

/// Independent random streams of one seed.
pub struct SeedStreams {
    pub prior: ChaCha8Rng,
    pub env: ChaCha8Rng,
    pub agent: ChaCha8Rng,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |i| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(i);
            r
        };
        SeedStreams {
            prior: stream(0),
            env: stream(1),
            agent: stream(2),
        }
    }
}

/// Per-step optimal reward used as the regret reference: the optimal gain
/// from `s1` for a continuing model, `ρ·V*_1 / H` for a finite-horizon one.
pub fn reference_gain(model: &Model, s1: usize) -> Result<f64> {
    match model {
        Model::Continuing(m) => {
            let opt = if policy_count(m.n_states(), m.n_actions()) <= DEFAULT_POLICY_CAP {
                optimal_gain_brute_force(m, DEFAULT_POLICY_CAP)?
            } else {
                relative_value_iteration(m, RviOptions::default())?
            };
            Ok(opt.gain.at(s1).clamp(0.0, 1.0))
        }
        Model::Episodic(fh) => {
            let (q, _) = backward_induction(fh.base(), fh.horizon())?;
            let v: f64 = fh.initial_dist().iter().enumerate().map(|(s, w)| w * q.value(0, s)).sum();
            Ok((v / fh.horizon() as f64).clamp(0.0, 1.0))
        }
    }
}

/// Everything produced by one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub truth: Model,
    pub output: RunOutput,
    pub report: RegretReport,
    /// Empty when no decomposition applies (a stationary agent on a
    /// finite-horizon model).
    pub decomposition: Vec<Decomposition>,
}

/// Resolved configuration shared by all seeds.
pub struct Prepared {
    cfg: ExperimentConfig,
    env: Environment,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let env = cfg.environment()?;
        cfg.agent_prior(&env)?;
        if let (AgentKind::Psrl, Some(h), Some(eh)) = (cfg.agent.agent, cfg.agent.h, env.horizon()) {
            if h != eh {
                return Err(Error::config("agent.H", format!("must equal the environment horizon {eh}")));
            }
        }
        if let Some(s) = cfg.start_state {
            if s >= env.n_states() {
                return Err(Error::config("start_state", "out of range"));
            }
        }
        Ok(Prepared { cfg: cfg.clone(), env })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    /// Runs one seed end to end.
    pub fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        let mut rng = SeedStreams::new(seed);
        let truth = self.env.instantiate(&mut rng.prior)?;
        let s1 = match (self.cfg.start_state, &truth) {
            (Some(s), _) => s,
            (None, Model::Episodic(fh)) => fh.sample_initial(&mut rng.env),
            (None, Model::Continuing(_)) => 0,
        };
        let mut agent = self.cfg.agent.build(self.cfg.agent_prior(&self.env)?)?;
        let output = run_agent(agent.as_mut(), &truth, s1, self.cfg.t, &mut rng.env, &mut rng.agent)?;
        let lambda = reference_gain(&truth, s1)?;
        let mut report = regret_curve(&output.trajectory, lambda)?;
        report.seed = Some(seed);
        let decomposition = match (self.cfg.agent.agent, &truth) {
            (AgentKind::Psrl, _) => decompose_finite(&output.episodes, &truth, self.cfg.agent.h.expect("validated"))?,
            (_, Model::Continuing(m)) => decompose_gain(&output.episodes, m, lambda)?,
            (_, Model::Episodic(_)) => Vec::new(),
        };
        if !decomposition.is_empty() {
            report.attach(&decomposition)?;
        }
        Ok(SeedRun {
            seed,
            truth,
            output,
            report,
            decomposition,
        })
    }
}

/// Per-seed numbers kept after the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub lambda_star: f64,
    pub final_regret: f64,
    pub n_episodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimism_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concentration_sum: Option<f64>,
    /// The first `track_episodes` episode records.
    pub episodes: Vec<EpisodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub k: usize,
    /// Seeds that reached episode `k`.
    pub n: usize,
    pub mean_length: f64,
    pub mean_delta_opt: f64,
    pub se_delta_opt: f64,
    pub mean_delta_conc: f64,
    pub se_delta_conc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub n_seeds: usize,
    #[serde(rename = "T")]
    pub t: usize,
    /// "bayesian" when the true MDP is drawn from a prior per seed,
    /// "frequentist" for a fixed MDP.
    pub regret: String,
    pub mean_final_regret: f64,
    pub se_final_regret: f64,
    pub mean_episodes: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_optimism_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_optimism_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_concentration_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_concentration_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_episode_decomposition: Option<Vec<EpisodeSummary>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub summary: Summary,
    pub seeds: Vec<SeedOutcome>,
    /// Mean cumulative regret at each `t`.
    pub mean_curve: Vec<f64>,
    pub se_curve: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Where per-seed CSVs go (when the config asks for them).
    pub out_dir: Option<&'a Path>,
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    fn se(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    let prepared = Prepared::new(cfg)?;
    match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?
            .install(|| execute(&prepared, opts.out_dir)),
        None => execute(&prepared, opts.out_dir),
    }
}

fn execute(prepared: &Prepared, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    let cfg = &prepared.cfg;
    let seeds = cfg.seeds.seeds();
    let t_max = cfg.t;
    let track = cfg.track_episodes;
    let write_csv = out_dir.filter(|_| cfg.write_trajectories);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut curve = vec![Moments::default(); t_max];
    let mut final_regret = Moments::default();
    let mut episodes = Moments::default();
    let mut optimism = Moments::default();
    let mut concentration = Moments::default();
    let mut per_k: Vec<(Moments, Moments, Moments)> = vec![Default::default(); track];
    let mut outcomes = Vec::with_capacity(seeds.len());
    let mut any_decomposition = false;

    for chunk in seeds.chunks(CHUNK) {
        let results: Vec<Result<(SeedOutcome, Vec<f64>)>> = chunk
            .par_iter()
            .map(|&seed| {
                let run = prepared.run_seed(seed)?;
                if let Some(dir) = write_csv {
                    write_seed_csv(&dir.join(format!("seed_{seed}.csv")), &run)?;
                }
                let decomposed = !run.decomposition.is_empty();
                let outcome = SeedOutcome {
                    seed,
                    lambda_star: run.report.lambda_star,
                    final_regret: run.report.final_regret(),
                    n_episodes: run.output.episodes.len(),
                    optimism_sum: decomposed.then(|| run.decomposition.iter().map(|d| d.delta_opt).sum()),
                    concentration_sum: decomposed.then(|| run.decomposition.iter().map(|d| d.delta_conc).sum()),
                    episodes: run.report.episodes.iter().take(track).cloned().collect(),
                };
                Ok((outcome, run.report.cumulative))
            })
            .collect();
        for r in results {
            let (outcome, cumulative) = r?;
            for (m, x) in curve.iter_mut().zip(&cumulative) {
                m.push(*x);
            }
            final_regret.push(outcome.final_regret);
            episodes.push(outcome.n_episodes as f64);
            if let (Some(o), Some(c)) = (outcome.optimism_sum, outcome.concentration_sum) {
                any_decomposition = true;
                optimism.push(o);
                concentration.push(c);
            }
            for (slot, rec) in per_k.iter_mut().zip(&outcome.episodes) {
                slot.0.push(rec.length as f64);
                if let (Some(o), Some(c)) = (rec.delta_opt, rec.delta_conc) {
                    slot.1.push(o);
                    slot.2.push(c);
                }
            }
            outcomes.push(outcome);
        }
    }

    let per_episode = any_decomposition.then(|| {
        per_k
            .iter()
            .enumerate()
            .filter(|(_, (len, _, _))| len.n > 0)
            .map(|(i, (len, o, c))| EpisodeSummary {
                k: i + 1,
                n: len.n,
                mean_length: len.mean(),
                mean_delta_opt: o.mean(),
                se_delta_opt: o.se(),
                mean_delta_conc: c.mean(),
                se_delta_conc: c.se(),
            })
            .collect()
    });
    let summary = Summary {
        config_hash: cfg.hash(),
        n_seeds: seeds.len(),
        t: t_max,
        regret: if prepared.env.is_bayesian() { "bayesian" } else { "frequentist" }.into(),
        mean_final_regret: final_regret.mean(),
        se_final_regret: final_regret.se(),
        mean_episodes: episodes.mean(),
        mean_optimism_sum: any_decomposition.then(|| optimism.mean()),
        se_optimism_sum: any_decomposition.then(|| optimism.se()),
        mean_concentration_sum: any_decomposition.then(|| concentration.mean()),
        se_concentration_sum: any_decomposition.then(|| concentration.se()),
        per_episode_decomposition: per_episode,
    };
    Ok(ExperimentResult {
        summary,
        seeds: outcomes,
        mean_curve: curve.iter().map(Moments::mean).collect(),
        se_curve: curve.iter().map(Moments::se).collect(),
    })
}

/// Floats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// JSON with every float written to 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// `seed,t,episode_index,reward,cumulative_regret`, one row per step.
pub fn seed_csv(run: &SeedRun) -> String {
    let mut out = String::with_capacity(64 * run.report.t + 64);
    out.push_str("seed,t,episode_index,reward,cumulative_regret\n");
    let k = run.output.trajectory.episode_index();
    for (i, (st, c)) in run.output.trajectory.steps.iter().zip(&run.report.cumulative).enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", run.seed, i + 1, k[i], fmt_f64(st.reward), fmt_f64(*c));
    }
    out
}

fn write_seed_csv(path: &Path, run: &SeedRun) -> Result<()> {
    std::fs::write(path, seed_csv(run))?;
    Ok(())
}

/// Writes `summary.json`, `seeds.json` and `mean_curve.csv` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("summary.json"), to_json_string(&result.summary)?)?;
    std::fs::write(dir.join("seeds.json"), to_json_string(&result.seeds)?)?;
    let mut csv = String::from("t,mean_cumulative_regret,se_cumulative_regret\n");
    for (i, (m, s)) in result.mean_curve.iter().zip(&result.se_curve).enumerate() {
        let _ = writeln!(csv, "{},{},{}", i + 1, fmt_f64(*m), fmt_f64(*s));
    }
    std::fs::write(dir.join("mean_curve.csv"), csv)?;
    Ok(())
}
