//! Regret accounting, experiments, exact oracles and the posterior-sampling
//! check.

mod config;
mod exact;
mod experiment;
mod lemma;
mod regret;

pub use config::{
    Environment, EnvironmentSpec, ExperimentConfig, PriorSpec, SeedSpec, DEFAULT_TRACK_EPISODES,
};
pub use exact::{
    exact_counterexample, exact_heaven_hell, exact_lazy_psrl, CounterexampleValue, ExactExpectation,
    DEFAULT_NODE_BUDGET,
};
pub use experiment::{
    fmt_f64, reference_gain, run_experiment, run_experiment_with, seed_csv, to_json_string, write_outputs,
    EpisodeSummary, ExperimentResult, Prepared, RunOptions, SeedOutcome, SeedRun, SeedStreams, Summary,
};
pub use lemma::{lemma1_check, Condition, Functional, LemmaConfig, LemmaReport, MIN_REPLICATIONS, MIN_STRATUM};
pub use regret::{decompose_finite, decompose_gain, regret_curve, Decomposition, EpisodeRecord, RegretReport};
