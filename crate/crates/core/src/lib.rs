//! Regret laboratory for tabular reinforcement learning.
//!
//! Posterior-sampling agents (fixed-episode, lazy with data-dependent
//! episode signals, and smoothed), an optimistic agent, exact planners, and
//! exact-enumeration oracles for regret under data-dependent episode
//! lengths.
//!
//! - [`mdp`]: MDP model, simulation, environments, classification
//! - [`planner`]: backward induction, gain, optimal gain, extended value iteration
//! - [`belief`]: finite-support and conjugate posteriors
//! - [`agents`]: PSRL, lazy PSRL, OFU, smoothed PSRL and episode signals
//! - [`lab`]: regret accounting, experiments, exact oracles, posterior-sampling check
//! - [`cli`]: the `regretlab` command

pub mod error;
mod graph;
pub mod mdp;
pub mod planner;
pub mod belief;
pub mod agents;
pub mod lab;
pub mod cli;

pub use error::{Error, Result};
