//! Exact planners: finite-horizon backward induction, average-reward gain,
//! optimal gain, and extended value iteration over confidence sets.

mod evi;
mod finite;
mod gain;
mod optimal;

pub use evi::{
    extended_value_iteration, optimistic_row, ConfidenceConstructor, ConfidenceSet, EviResult, HoeffdingRadii,
    VisitStats, EVI_MAX_ITERATIONS,
};
pub use finite::{backward_induction, plan_finite_horizon, policy_value_finite, QTable};
pub use gain::{chain_gain, gain, GainVector, SOLVE_TOLERANCE};
pub use optimal::{
    optimal_gain, optimal_gain_brute_force, relative_value_iteration, GainMethod, OptimalGain, RviOptions,
    APERIODICITY_WEIGHT,
};
