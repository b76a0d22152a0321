//! Exact long-run average reward of a stationary policy.
//!
//! The induced chain is split into recurrent classes (closed strongly
//! connected components of its support graph). Each class gets the gain of
//! its stationary distribution; transient states average the class gains
//! weighted by their absorption probabilities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{support, Components};
use crate::mdp::{StationaryPolicy, TabularMDP};

/// Residual tolerance of the linear solves.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Long-run average reward per start state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainVector(pub Vec<f64>);

impl GainVector {
    #[inline]
    pub fn at(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn gain(mdp: &TabularMDP, policy: &StationaryPolicy) -> Result<GainVector> {
    if policy.n_states() != mdp.n_states() {
        return Err(Error::Argument("policy and MDP disagree on n_states".into()));
    }
    let (p, r) = mdp.induced_chain(policy);
    chain_gain(&p, &r).map(GainVector)
}

/// Gain of a Markov reward process with row-major transition matrix `p`
/// (`n x n`) and per-state reward `r`.
pub fn chain_gain(p: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = r.len();
    if p.len() != n * n {
        return Err(Error::Argument("transition matrix shape does not match rewards".into()));
    }
    if n == 1 {
        return Ok(vec![r[0]]);
    }
    let adj = support(p, n);
    let comps = Components::new(&adj);
    let closed = comps.closed(&adj);
    let mut g = vec![f64::NAN; n];
    let mut recurrent = vec![false; n];
    for &c in &closed {
        let members = &comps.members[c];
        let pi = stationary(p, n, members)?;
        let class_gain: f64 = members.iter().zip(&pi).map(|(&s, w)| w * r[s]).sum();
        for &s in members {
            g[s] = class_gain;
            recurrent[s] = true;
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&s| !recurrent[s]).collect();
    if !transient.is_empty() {
        // x = Q x + b on transient states, with b the one-step expected
        // recurrent-class gain.
        let m = transient.len();
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for (i, &s) in transient.iter().enumerate() {
            let row = &p[s * n..(s + 1) * n];
            for (j, &t) in transient.iter().enumerate() {
                a[(i, j)] -= row[t];
            }
            b[i] = (0..n).filter(|&t| recurrent[t]).map(|t| row[t] * g[t]).sum();
        }
        let x = solve(&a, &b, "absorption")?;
        for (i, &s) in transient.iter().enumerate() {
            g[s] = x[i];
        }
    }
    Ok(g)
}

/// Stationary distribution of the closed class `members`.
fn stationary(p: &[f64], n: usize, members: &[usize]) -> Result<Vec<f64>> {
    let m = members.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    // Rows of (P_C - I)^T, last equation replaced by sum(pi) = 1.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, &si) in members.iter().enumerate() {
        for (j, &sj) in members.iter().enumerate() {
            a[(j, i)] = p[si * n + sj] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let pi = solve(&a, &b, "stationary distribution")?;
    // Full balance check, including the equation that was replaced.
    let mut worst: f64 = 0.0;
    for (j, &sj) in members.iter().enumerate() {
        let inflow: f64 = members.iter().enumerate().map(|(i, &si)| pi[i] * p[si * n + sj]).sum();
        worst = worst.max((inflow - pi[j]).abs());
    }
    if worst > SOLVE_TOLERANCE || pi.iter().any(|&x| x < -SOLVE_TOLERANCE) {
        return Err(Error::Numerical(format!(
            "stationary distribution of class {members:?} has balance residual {worst:e}"
        )));
    }
    Ok(pi.iter().map(|&x| x.max(0.0)).collect())
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular {}x{} system", a.nrows(), a.ncols())))?;
    let resid = (a * &x - b).amax();
    if !resid.is_finite() || resid > SOLVE_TOLERANCE {
        return Err(Error::Numerical(format!("{what}: residual {resid:e} exceeds {SOLVE_TOLERANCE:e}")));
    }
    Ok(x)
}
