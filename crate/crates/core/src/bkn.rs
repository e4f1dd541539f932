//! BKN Poisson factorization, the baseline model.
//!
//! Edge counts are Poisson with rate `lambda_ij = sum_k theta_ik theta_jk`.
//! EM splits every observed edge over channels in proportion to
//! `theta_ik theta_jk` (E-step) and sets
//!
//! ```text
//! theta_ik = sum_j A_ij q_ijk / sqrt(sum_ij A_ij q_ijk)
//! ```
//!
//! (M-step). Pairs with unknown status are imputed with their expected count
//! `lambda_ij` at the start of every iteration; for such a pair
//! `A_ij q_ijk = theta_ik theta_jk`, so imputation costs `O(K N_m)` and the
//! whole iteration stays `O(K (N_n + N_e + N_m))`.
//!
//! The closed-form M-step maximizes the complete-data Poisson likelihood in
//! which every node also carries a self-rate `lambda_ii` with zero observed
//! count, so [`poisson_log_likelihood`] includes the `-lambda_ii / 2` terms.

use std::time::Instant;

use rayon::prelude::*;

use crate::em::{FitConfig, FitReport};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BknParams {
    pub theta: Matrix,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pair(theta: &Matrix, i: usize, j: usize) -> Result<()> {
    for idx in [i, j] {
        if idx >= theta.rows() {
            return Err(Error::NodeOutOfRange {
                index: idx,
                num_nodes: theta.rows(),
            });
        }
    }
    if i == j {
        return Err(Error::SelfPair(i));
    }
    Ok(())
}

/// Poisson rate `sum_k theta_ik theta_jk`.
pub fn bkn_rate(theta: &Matrix, i: usize, j: usize) -> Result<f64> {
    check_pair(theta, i, j)?;
    Ok(dot(theta.row(i), theta.row(j)))
}

/// Share of the edge `(i, j)` attributed to channel `k`.
pub fn bkn_estep(theta: &Matrix, i: usize, j: usize, k: usize) -> Result<f64> {
    check_pair(theta, i, j)?;
    if k >= theta.cols() {
        return Err(Error::InvalidValue(format!("channel {k} out of range")));
    }
    let rate = dot(theta.row(i), theta.row(j));
    if rate <= 0.0 {
        return Err(Error::ZeroRateEdge { i, j });
    }
    Ok(theta.get(i, k) * theta.get(j, k) / rate)
}

/// Scores for link prediction: the Poisson rate of each pair.
pub fn bkn_predict(theta: &Matrix, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pairs.iter().map(|&(i, j)| bkn_rate(theta, i, j)).collect()
}

fn check_dims(theta: &Matrix, g: &Graph) -> Result<()> {
    if theta.rows() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "theta has {} rows, graph has {} nodes",
            theta.rows(),
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Observed-data Poisson log-likelihood (constant `log A!` terms dropped):
///
/// `sum_{known i<j} (A_ij log lambda_ij - lambda_ij) - sum_i lambda_ii / 2`.
///
/// Computed in `O(K (N_n + N_e + N_m))` through column sums.
pub fn poisson_log_likelihood(theta: &Matrix, g: &Graph) -> Result<f64> {
    check_dims(theta, g)?;
    let col_sums = theta.column_sums();
    // sum over all ordered pairs including i = j, halved
    let total_rate: f64 = 0.5 * col_sums.iter().map(|s| s * s).sum::<f64>();
    let mut llk = -total_rate;
    for (i, j) in g.edge_pairs() {
        llk += dot(theta.row(i), theta.row(j)).ln();
    }
    for (i, j) in g.masked_pairs() {
        llk += dot(theta.row(i), theta.row(j));
    }
    Ok(llk)
}

/// Poisson log-likelihood with the masked pairs' counts fixed at the rates
/// implied by `imputed_from`.
pub fn imputed_log_likelihood(theta: &Matrix, g: &Graph, imputed_from: &Matrix) -> Result<f64> {
    check_dims(imputed_from, g)?;
    let mut llk = poisson_log_likelihood(theta, g)?;
    for (i, j) in g.masked_pairs() {
        let imputed = dot(imputed_from.row(i), imputed_from.row(j));
        let rate = dot(theta.row(i), theta.row(j));
        // poisson_log_likelihood already removed -lambda for masked pairs
        llk += imputed * rate.ln() - rate;
    }
    Ok(llk)
}

/// Unnormalized M-step numerators `sum_j A_ij q_ijk` for row `i`, with masked
/// pairs imputed.
fn row_numerators(g: &Graph, theta: &Matrix, i: usize, out: &mut [f64]) -> Result<()> {
    out.fill(0.0);
    let row_i = theta.row(i);
    for &j in g.neighbors(i) {
        let row_j = theta.row(j);
        let rate = dot(row_i, row_j);
        if rate <= 0.0 {
            return Err(Error::ZeroRateEdge { i, j });
        }
        for ((acc, a), b) in out.iter_mut().zip(row_i).zip(row_j) {
            *acc += a * b / rate;
        }
    }
    for &j in g.masked(i) {
        for ((acc, a), b) in out.iter_mut().zip(row_i).zip(theta.row(j)) {
            *acc += a * b;
        }
    }
    Ok(())
}

fn sweep(g: &Graph, theta: &Matrix, next: &mut Matrix, pool: &rayon::ThreadPool) -> Result<()> {
    let kk = theta.cols();
    pool.install(|| {
        next.as_mut_slice()
            .par_chunks_mut(kk)
            .enumerate()
            .try_for_each(|(i, out)| row_numerators(g, theta, i, out))
    })?;
    let norms: Vec<f64> = next.column_sums().into_iter().map(f64::sqrt).collect();
    for row in next.as_mut_slice().chunks_mut(kk) {
        for (v, norm) in row.iter_mut().zip(&norms) {
            *v = if *norm > 0.0 { *v / norm } else { 0.0 };
        }
    }
    Ok(())
}

/// One EM update (impute, E, M) of `theta`.
pub fn bkn_update(g: &Graph, theta: &Matrix) -> Result<Matrix> {
    check_dims(theta, g)?;
    let pool = FitConfig::default().thread_pool()?;
    let mut next = Matrix::zeros(theta.rows(), theta.cols());
    sweep(g, theta, &mut next, &pool)?;
    Ok(next)
}

pub fn bkn_fit(g: &Graph, cfg: &FitConfig) -> Result<(BknParams, FitReport)> {
    bkn_fit_with_observer(g, cfg, &mut |_, _| {})
}

/// As [`bkn_fit`], calling `observer(iteration, theta)` after every iteration.
pub fn bkn_fit_with_observer(
    g: &Graph,
    cfg: &FitConfig,
    observer: &mut dyn FnMut(usize, &Matrix),
) -> Result<(BknParams, FitReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.thread_pool()?;
    let mut theta = match &cfg.init {
        Some(m) => {
            if m.rows() != g.num_nodes() || m.cols() != cfg.num_channels {
                return Err(Error::Dimension(format!(
                    "initial matrix is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    g.num_nodes(),
                    cfg.num_channels
                )));
            }
            m.clone()
        }
        None => Matrix::random_uniform(g.num_nodes(), cfg.num_channels, cfg.seed),
    };
    let mut next = theta.clone();
    let mut llk_trace = Vec::new();
    if cfg.trace_llk {
        llk_trace.push(poisson_log_likelihood(&theta, g)?);
    }

    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < cfg.max_iters && change >= cfg.tol {
        sweep(g, &theta, &mut next, &pool)?;
        iterations += 1;
        change = next.max_abs_diff(&theta);
        std::mem::swap(&mut theta, &mut next);
        if cfg.trace_llk {
            llk_trace.push(poisson_log_likelihood(&theta, g)?);
        }
        observer(iterations, &theta);
    }

    let report = FitReport {
        iterations,
        final_change: change,
        converged: change < cfg.tol,
        llk_trace,
        threads: cfg.threads,
        wall_time_secs: start.elapsed().as_secs_f64(),
        warnings: Vec::new(),
    };
    Ok((BknParams { theta }, report))
}
