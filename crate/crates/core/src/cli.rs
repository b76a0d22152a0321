//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::agents::{AgentKind, AgentSpec, EpisodeSignal};
use crate::error::{Error, Result};
use crate::lab::{
    exact_counterexample, exact_heaven_hell, lemma1_check, run_experiment_with, write_outputs, EnvironmentSpec,
    ExperimentConfig, LemmaConfig, PriorSpec, RunOptions, SeedSpec,
};
use crate::mdp::{build_named_env, classify, load_model, EnvParams, DEFAULT_POLICY_CAP};

#[derive(Debug, Parser)]
#[command(name = "regretlab", version, about = "Regret laboratory for tabular reinforcement learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config and write per-seed CSVs plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the config's seeds with as many seeds starting here.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (output does not depend on this).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print connectedness flags of an MDP file or a named environment.
    Classify {
        #[arg(long, conflicts_with = "env", required_unless_present = "env")]
        mdp: Option<PathBuf>,
        #[arg(long)]
        env: Option<String>,
        /// Environment parameter as key=value (value parsed as JSON).
        #[arg(long = "param", requires = "env")]
        params: Vec<String>,
        #[arg(long = "policy-cap", default_value_t = DEFAULT_POLICY_CAP)]
        policy_cap: u128,
    },
    /// Exact optimism sum of lazy PSRL on the two-point bandit.
    Counterexample {
        #[arg(long)]
        hmax: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Also run this many Monte Carlo seeds and report the z-score.
        #[arg(long = "mc-seeds")]
        mc_seeds: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Exact Bayesian regret of PSRL in heaven and hell.
    HeavenHell {
        #[arg(long = "T")]
        t: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long = "mc-seeds")]
        mc_seeds: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Stratified two-sample check of g(M*) against g(M_k).
    LemmaCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(path.display().to_string(), format!("{what} not found")))
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn parse_params(raw: &[String]) -> Result<EnvParams> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("--param expects key=value, got '{kv}'")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
            Ok((k.to_string(), value))
        })
        .collect()
}

fn mc_config(environment: PriorSpec, agent: AgentSpec, t: usize, seeds: u64) -> ExperimentConfig {
    ExperimentConfig {
        environment: EnvironmentSpec::prior(environment, None),
        agent,
        prior: None,
        t,
        start_state: Some(0),
        seeds: SeedSpec::Range { base: 0, count: seeds },
        track_episodes: 0,
        write_trajectories: false,
        base_dir: None,
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Run { config, out: dir, seed, jobs } => {
            require_file(&config, "config file")?;
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(base) = seed {
                cfg.seeds = SeedSpec::Range {
                    base,
                    count: cfg.seeds.seeds().len() as u64,
                };
            }
            let result = run_experiment_with(&cfg, &RunOptions { jobs, out_dir: Some(&dir) })?;
            write_outputs(&result, &dir)?;
            let s = &result.summary;
            writeln!(
                out,
                "mean final regret {} ± {} (n = {}, T = {}, {})",
                s.mean_final_regret, s.se_final_regret, s.n_seeds, s.t, s.regret
            )?;
            if let (Some(m), Some(se)) = (s.mean_optimism_sum, s.se_optimism_sum) {
                writeln!(out, "mean optimism sum {m} ± {se}")?;
            }
        }
        Command::Classify { mdp, env, params, policy_cap } => {
            let model = match (mdp, env) {
                (Some(path), _) => {
                    require_file(&path, "MDP file")?;
                    load_model(&path)?
                }
                (None, Some(name)) => build_named_env(&name, &parse_params(&params)?)?,
                (None, None) => return Err(Error::Argument("give --mdp or --env".into())),
            };
            let r = classify(model.mdp(), policy_cap);
            writeln!(out, "ergodic: {}", r.ergodic)?;
            writeln!(out, "unichain: {}", r.unichain)?;
            writeln!(out, "communicating: {}", r.communicating)?;
            writeln!(out, "weakly_communicating: {}", r.weakly_communicating)?;
            match r.method {
                crate::mdp::ClassifyMethod::Exhaustive { policies } => {
                    writeln!(out, "method: exhaustive ({policies} policies)")?
                }
                crate::mdp::ClassifyMethod::Capped { sampled } => {
                    writeln!(out, "method: capped ({sampled} sampled policies; ergodic/unichain not exhaustive)")?
                }
            }
            for w in &r.witnesses {
                writeln!(out, "witness: {w}")?;
            }
        }
        Command::Counterexample { hmax, t, p, mc_seeds, jobs } => {
            let v = exact_counterexample(hmax, t, p)?;
            writeln!(out, "signed: {}", v.signed)?;
            writeln!(out, "absolute: {}", v.absolute)?;
            if let Some(n) = mc_seeds {
                let agent = AgentSpec {
                    signal: Some(EpisodeSignal::RewardThreshold { threshold: 1.0, h_max: hmax }),
                    ..AgentSpec::kind(AgentKind::LazyPsrl)
                };
                let cfg = mc_config(PriorSpec::TwoPointBandit { p }, agent, t, n);
                let res = with_jobs(jobs, || run_experiment_with(&cfg, &RunOptions::default()))?;
                let s = &res.summary;
                let (m, se) = (s.mean_optimism_sum.unwrap_or(0.0), s.se_optimism_sum.unwrap_or(0.0));
                writeln!(out, "monte carlo: {m} ± {se} over {n} seeds")?;
                writeln!(out, "z: {}", if se > 0.0 { (m - v.signed) / se } else { 0.0 })?;
            }
        }
        Command::HeavenHell { t, p, mc_seeds, jobs } => {
            let v = exact_heaven_hell(t, p)?;
            writeln!(out, "expected regret: {v}")?;
            if let Some(n) = mc_seeds {
                let agent = AgentSpec {
                    h: Some(1),
                    ..AgentSpec::kind(AgentKind::Psrl)
                };
                let prior = PriorSpec::HeavenHell { p, arrival_reward: true };
                let cfg = mc_config(prior, agent, t, n);
                let res = with_jobs(jobs, || run_experiment_with(&cfg, &RunOptions::default()))?;
                let s = &res.summary;
                writeln!(out, "monte carlo: {} ± {} over {n} seeds", s.mean_final_regret, s.se_final_regret)?;
                let z = if s.se_final_regret > 0.0 { (s.mean_final_regret - v) / s.se_final_regret } else { 0.0 };
                writeln!(out, "z: {z}")?;
            }
        }
        Command::LemmaCheck { config, n, jobs } => {
            require_file(&config, "config file")?;
            let cfg = LemmaConfig::load(&config)?;
            let r = with_jobs(jobs, || lemma1_check(&cfg, n))?;
            writeln!(out, "statistic: {}", r.statistic)?;
            writeln!(out, "dof: {}", r.dof)?;
            writeln!(out, "p_value: {}", r.p_value)?;
            writeln!(out, "used: {} of {} in {} strata", r.n_used, r.n_replications, r.n_strata)?;
            writeln!(out, "mean g(M_k) - g(M*): {} ± {}", r.mean_difference, r.se_difference)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code: 0 ok, 1 runtime failure, 2 usage or
/// configuration error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
