//! C ABI over `regretlab`.
//!
//! Every function returns an [`RlStatus`]; on anything but `RL_STATUS_OK`
//! the message is available from [`rl_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings handed out by the library are released with [`rl_string_free`].
//! Panics never cross the boundary; they surface as `RL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use regretlab::lab::{
    exact_counterexample, exact_heaven_hell, run_experiment_with, to_json_string, ExperimentConfig,
    ExperimentResult, RunOptions,
};
use regretlab::mdp::{build_named_env, classify, parse_model, ClassifyMethod, EnvParams, Model, StationaryPolicy};
use regretlab::planner::{gain, optimal_gain, GainMethod};
use regretlab::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidMdp = 4,
    InvalidConfig = 5,
    Contract = 6,
    Numerical = 7,
    NonConvergence = 8,
    InsufficientData = 9,
    Io = 10,
    /// An output buffer was too small; the required length was written.
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for RlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Argument(_) | Error::Inconsistent(_) => RlStatus::InvalidArgument,
            Error::InvalidMdp { .. } => RlStatus::InvalidMdp,
            Error::Config { .. } | Error::Json(_) => RlStatus::InvalidConfig,
            Error::Contract(_) => RlStatus::Contract,
            Error::Numerical(_) => RlStatus::Numerical,
            Error::NonConvergence { .. } => RlStatus::NonConvergence,
            Error::InsufficientData(_) => RlStatus::InsufficientData,
            Error::Io(_) => RlStatus::Io,
        }
    }
}

/// Continuing or finite-horizon MDP.
pub struct RlModel(Model);

/// Result of an experiment run.
pub struct RlExperiment(ExperimentResult);

/// Connectedness flags of an MDP.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RlClassification {
    pub ergodic: bool,
    pub unichain: bool,
    pub communicating: bool,
    pub weakly_communicating: bool,
    /// False when ergodic/unichain were checked on a policy sample only.
    pub exhaustive: bool,
}

/// Optimal-gain solver selector, passed as its integer value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlGainMethod {
    BruteForce = 0,
    RelativeVi = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(RlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(RlStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RlStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(RlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn model<'a>(m: *const RlModel) -> Result<&'a Model, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn fill(values: &[f64], out: *mut f64, len: usize, needed: *mut usize) -> Result<(), Fail> {
    if !needed.is_null() {
        needed.write(values.len());
    }
    if len < values.len() {
        return Err(Fail(
            RlStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", values.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(RlStatus::InvalidUtf8, "string contains NUL".into()))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an MDP JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_from_json(json: *const c_char, out: *mut *mut RlModel) -> RlStatus {
    guard(|| {
        let m = parse_model(text(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(RlModel(m))), "out")
    })
}

/// Builds a named environment (`heaven_hell`, `two_point_bandit`, `chain`,
/// `random`). `params_json` is a JSON object or NULL for defaults.
///
/// # Safety
/// String arguments must be NUL-terminated or NULL where allowed; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_named(
    name: *const c_char,
    params_json: *const c_char,
    out: *mut *mut RlModel,
) -> RlStatus {
    guard(|| {
        let name = text(name, "name")?;
        let params: EnvParams = if params_json.is_null() {
            EnvParams::new()
        } else {
            serde_json::from_str(text(params_json, "params_json")?).map_err(Error::from)?
        };
        let m = build_named_env(name, &params)?;
        write_out(out, Box::into_raw(Box::new(RlModel(m))), "out")
    })
}

/// # Safety
/// `m` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn rl_model_free(m: *mut RlModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Writes the state count, action count and horizon (0 when continuing).
///
/// # Safety
/// `m` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_shape(
    m: *const RlModel,
    n_states: *mut usize,
    n_actions: *mut usize,
    horizon: *mut usize,
) -> RlStatus {
    guard(|| {
        let m = model(m)?;
        write_out(n_states, m.mdp().n_states(), "n_states")?;
        write_out(n_actions, m.mdp().n_actions(), "n_actions")?;
        write_out(horizon, m.horizon().unwrap_or(0), "horizon")
    })
}

/// Serialises the model back to JSON; free the result with
/// [`rl_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_to_json(m: *const RlModel, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let s = regretlab::mdp::model_to_json(model(m)?);
        write_out(out, into_c_string(s)?, "out")
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_model_classify(
    m: *const RlModel,
    policy_cap: u64,
    out: *mut RlClassification,
) -> RlStatus {
    guard(|| {
        let r = classify(model(m)?.mdp(), policy_cap as u128);
        let c = RlClassification {
            ergodic: r.ergodic,
            unichain: r.unichain,
            communicating: r.communicating,
            weakly_communicating: r.weakly_communicating,
            exhaustive: matches!(r.method, ClassifyMethod::Exhaustive { .. }),
        };
        write_out(out, c, "out")
    })
}

/// Gain of the stationary policy `actions[0..n_states]` from every start
/// state, written to `out[0..n_states]`. `needed` (nullable) receives the
/// number of values.
///
/// # Safety
/// `actions` must hold `n_actions_len` values; `out` must hold `out_len`.
#[no_mangle]
pub unsafe extern "C" fn rl_model_gain(
    m: *const RlModel,
    actions: *const usize,
    n_actions_len: usize,
    out: *mut f64,
    out_len: usize,
    needed: *mut usize,
) -> RlStatus {
    guard(|| {
        let mdp = model(m)?.mdp();
        if actions.is_null() {
            return Err(null("actions"));
        }
        if n_actions_len != mdp.n_states() {
            return Err(Fail(
                RlStatus::InvalidArgument,
                format!("policy has {n_actions_len} entries, MDP has {} states", mdp.n_states()),
            ));
        }
        let policy = StationaryPolicy::new(std::slice::from_raw_parts(actions, n_actions_len).to_vec(), mdp.n_actions())?;
        let g = gain(mdp, &policy)?;
        fill(g.as_slice(), out, out_len, needed)
    })
}

/// Optimal gain from every start state, written to `out[0..n_states]`.
/// `method` is an [`RlGainMethod`] value.
///
/// # Safety
/// `out` must hold `out_len` values; `needed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn rl_model_optimal_gain(
    m: *const RlModel,
    method: u32,
    out: *mut f64,
    out_len: usize,
    needed: *mut usize,
) -> RlStatus {
    guard(|| {
        let method = match method {
            m if m == RlGainMethod::BruteForce as u32 => GainMethod::BruteForce,
            m if m == RlGainMethod::RelativeVi as u32 => GainMethod::RelativeVi,
            m => return Err(Fail(RlStatus::InvalidArgument, format!("unknown gain method {m}"))),
        };
        let opt = optimal_gain(model(m)?.mdp(), method)?;
        fill(opt.gain.as_slice(), out, out_len, needed)
    })
}

/// Exact expected optimism of lazy posterior sampling with a reward
/// threshold signal on the two-point bandit.
///
/// # Safety
/// Out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_exact_counterexample(
    h_max: usize,
    t: usize,
    p: f64,
    signed_sum: *mut f64,
    absolute_sum: *mut f64,
) -> RlStatus {
    guard(|| {
        let v = exact_counterexample(h_max, t, p)?;
        write_out(signed_sum, v.signed, "signed_sum")?;
        write_out(absolute_sum, v.absolute, "absolute_sum")
    })
}

/// Exact expected regret of posterior sampling on heaven and hell.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_exact_heaven_hell(t: usize, p: f64, out: *mut f64) -> RlStatus {
    guard(|| write_out(out, exact_heaven_hell(t, p)?, "out"))
}

/// Runs an experiment described by a JSON config. `jobs` = 0 uses the
/// global thread pool. Relative paths in the config resolve against the
/// working directory. Outputs are identical for every `jobs`.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_experiment_run(
    config_json: *const c_char,
    jobs: usize,
    out: *mut *mut RlExperiment,
) -> RlStatus {
    guard(|| {
        let cfg = ExperimentConfig::parse(text(config_json, "config_json")?)?;
        let opts = RunOptions {
            jobs: (jobs > 0).then_some(jobs),
            out_dir: None,
        };
        let result = run_experiment_with(&cfg, &opts)?;
        write_out(out, Box::into_raw(Box::new(RlExperiment(result))), "out")
    })
}

/// # Safety
/// `e` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn rl_experiment_free(e: *mut RlExperiment) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Summary as JSON (the contents of `summary.json`); free with
/// [`rl_string_free`].
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_experiment_summary_json(e: *const RlExperiment, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("experiment"))?;
        let s = to_json_string(&e.0.summary)?;
        write_out(out, into_c_string(s)?, "out")
    })
}

/// Mean cumulative regret at `t = 1..T`.
///
/// # Safety
/// `out` must hold `out_len` values; `needed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn rl_experiment_mean_curve(
    e: *const RlExperiment,
    out: *mut f64,
    out_len: usize,
    needed: *mut usize,
) -> RlStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("experiment"))?;
        fill(&e.0.mean_curve, out, out_len, needed)
    })
}
