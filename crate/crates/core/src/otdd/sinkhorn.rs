//! Log-domain Sinkhorn for entropic optimal transport.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SinkhornParams {
    pub epsilon: f64,
    pub max_iter: usize,
    /// L1 marginal violation at which iteration stops.
    pub tol: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        SinkhornParams {
            epsilon: 0.05,
            max_iter: 2000,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    pub plan: Matrix,
    /// `<plan, cost>`.
    pub cost: f64,
    pub iterations: usize,
    /// Final L1 marginal violation (rows plus columns).
    pub violation: f64,
    pub converged: bool,
}

/// Halving factor of the warm-start epsilon schedule.
const ANNEAL_FACTOR: f64 = 0.5;
/// Iteration cap per intermediate epsilon.
const ANNEAL_ITERS: usize = 50;

/// Entropic OT between weights `mu` (rows) and `nu` (columns).
///
/// Potentials are warm-started along a geometric epsilon schedule from the
/// largest cost down to `params.epsilon`; `max_iter` and `tol` govern the
/// iterations at the target epsilon. Hitting `max_iter` is not an error: the
/// result is returned with `converged = false`.
pub fn sinkhorn(cost: &Matrix, mu: &[f64], nu: &[f64], params: &SinkhornParams) -> Result<SinkhornResult> {
    validate(cost, mu, nu, params)?;
    let (n, m) = (cost.rows(), cost.cols());
    let log_mu: Vec<f64> = mu.iter().map(|&w| log_weight(w)).collect();
    let log_nu: Vec<f64> = nu.iter().map(|&w| log_weight(w)).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];

    let c_max = cost.as_slice().iter().fold(0.0f64, |a, &c| a.max(libm::fabs(c)));
    let mut eps = c_max;
    while eps > params.epsilon {
        for _ in 0..ANNEAL_ITERS {
            update_f(cost, &log_nu, &g, eps, &mut f);
            update_g(cost, &log_mu, &f, eps, &mut g);
        }
        eps *= ANNEAL_FACTOR;
    }

    let eps = params.epsilon;
    let mut iterations = 0;
    let mut violation = f64::INFINITY;
    while iterations < params.max_iter {
        update_f(cost, &log_nu, &g, eps, &mut f);
        update_g(cost, &log_mu, &f, eps, &mut g);
        iterations += 1;
        violation = marginal_violation(cost, &log_mu, &log_nu, &f, &g, eps, mu, nu);
        if violation < params.tol {
            break;
        }
    }
    if iterations == 0 {
        violation = marginal_violation(cost, &log_mu, &log_nu, &f, &g, eps, mu, nu);
    }

    let mut plan = Matrix::zeros(n, m);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let p = plan_entry(cost, &log_mu, &log_nu, &f, &g, eps, i, j);
            plan[(i, j)] = p;
            total += p * cost[(i, j)];
        }
    }
    Ok(SinkhornResult {
        plan,
        cost: total,
        iterations,
        violation,
        converged: violation < params.tol,
    })
}

/// Uniform weights `1/n`.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn validate(cost: &Matrix, mu: &[f64], nu: &[f64], params: &SinkhornParams) -> Result<()> {
    let bad = |msg: alloc::string::String| Err(Error::InvalidTransport(msg));
    if cost.rows() == 0 || cost.cols() == 0 {
        return bad("empty cost matrix".into());
    }
    if mu.len() != cost.rows() || nu.len() != cost.cols() {
        return bad(alloc::format!(
            "weights of length {} and {} for a {}x{} cost",
            mu.len(),
            nu.len(),
            cost.rows(),
            cost.cols()
        ));
    }
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return bad(alloc::format!("epsilon must be positive, got {}", params.epsilon));
    }
    if !(params.tol > 0.0) {
        return bad(alloc::format!("tolerance must be positive, got {}", params.tol));
    }
    if cost.as_slice().iter().any(|c| !c.is_finite()) {
        return bad("cost matrix has non-finite entries".into());
    }
    for (name, w) in [("mu", mu), ("nu", nu)] {
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return bad(alloc::format!("{name} has negative or non-finite weights"));
        }
        let sum: f64 = w.iter().sum();
        // 1e-12, widened for summation rounding on long vectors
        let tol = 1e-12f64.max(4.0 * f64::EPSILON * w.len() as f64);
        if libm::fabs(sum - 1.0) > tol {
            return bad(alloc::format!("{name} sums to {sum}, not 1"));
        }
    }
    Ok(())
}

fn log_weight(w: f64) -> f64 {
    if w > 0.0 {
        libm::log(w)
    } else {
        f64::NEG_INFINITY
    }
}

/// `-eps * log sum_j exp(log_w_j + (pot_j - c_j) / eps)` over finite terms.
fn soft_min(terms: impl Iterator<Item = f64> + Clone, eps: f64) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let s: f64 = terms.map(|t| libm::exp(t - max)).sum();
    -eps * (max + libm::log(s))
}

fn update_f(cost: &Matrix, log_nu: &[f64], g: &[f64], eps: f64, f: &mut [f64]) {
    for (i, fi) in f.iter_mut().enumerate() {
        let row = cost.row(i);
        let terms = log_nu
            .iter()
            .zip(g)
            .zip(row)
            .map(move |((&ln, &gj), &c)| ln + (gj - c) / eps);
        *fi = soft_min(terms, eps);
    }
}

fn update_g(cost: &Matrix, log_mu: &[f64], f: &[f64], eps: f64, g: &mut [f64]) {
    for (j, gj) in g.iter_mut().enumerate() {
        let terms = log_mu
            .iter()
            .zip(f)
            .enumerate()
            .map(move |(i, (&lm, &fi))| lm + (fi - cost[(i, j)]) / eps);
        *gj = soft_min(terms, eps);
    }
}

#[allow(clippy::too_many_arguments)]
fn plan_entry(cost: &Matrix, log_mu: &[f64], log_nu: &[f64], f: &[f64], g: &[f64], eps: f64, i: usize, j: usize) -> f64 {
    let e = log_mu[i] + log_nu[j] + (f[i] + g[j] - cost[(i, j)]) / eps;
    if e == f64::NEG_INFINITY {
        0.0
    } else {
        libm::exp(e)
    }
}

#[allow(clippy::too_many_arguments)]
fn marginal_violation(
    cost: &Matrix,
    log_mu: &[f64],
    log_nu: &[f64],
    f: &[f64],
    g: &[f64],
    eps: f64,
    mu: &[f64],
    nu: &[f64],
) -> f64 {
    let (n, m) = (cost.rows(), cost.cols());
    let mut cols = vec![0.0; m];
    let mut v = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for (j, c) in cols.iter_mut().enumerate() {
            let p = plan_entry(cost, log_mu, log_nu, f, g, eps, i, j);
            r += p;
            *c += p;
        }
        v += libm::fabs(r - mu[i]);
    }
    v + cols.iter().zip(nu).map(|(c, w)| libm::fabs(c - w)).sum::<f64>()
}
