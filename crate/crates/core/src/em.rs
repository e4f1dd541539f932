//! EM fitting of the LCN attachment matrix.
//!
//! Each node `i` has, for every other node `j` and channel `k`, a latent
//! half-edge `e~_ikj ~ Bernoulli(p_ik)`. The E-step replaces each half-edge by
//! its expectation given the observed status of `(i, j)`; the M-step sets
//! `p_ik` to the average of those expectations over the pairs whose status is
//! known. Masked pairs enter neither the sums nor the denominators.
//!
//! Two implementations of the same update map are provided:
//!
//! * [`fit_naive`] visits every pair, `O(N_e K^2 + N_n^2 K)` per iteration.
//!   It exists as the reference the cached version is checked against.
//! * [`fit_efficient`] caches column sums of `p` and the edge probabilities
//!   of observed edges, so non-edges are handled in closed form and an
//!   iteration costs `O(K (N_n + N_e + N_m))`. Rows are updated in parallel.
//!
//! Both perform synchronous sweeps: the whole next iterate is computed from
//! the previous one before the two are swapped, so the result does not depend
//! on row order or thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{Matrix, ParamMatrix};
use crate::model::{log_likelihood, row_edge_probability};
use crate::numeric::one_minus_product;

/// Allowed excursion outside `[0, 1]` from rounding before clamping.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub num_channels: usize,
    pub max_iters: usize,
    /// Stop once the largest absolute entry change falls below this.
    pub tol: f64,
    /// Entries below this value are not updated (cached fitter only).
    pub skip_tol: f64,
    pub seed: u64,
    pub threads: usize,
    /// Warm start; replaces the Uniform(0, 1) initialization.
    pub init: Option<Matrix>,
    /// Record the observed-data log-likelihood after every iteration.
    /// This costs `O(N_n^2 K)` per iteration.
    pub trace_llk: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            num_channels: 8,
            max_iters: 10_000,
            tol: 1e-4,
            skip_tol: 1e-10,
            seed: 0,
            threads: 1,
            init: None,
            trace_llk: false,
        }
    }
}

impl FitConfig {
    pub fn with_channels(num_channels: usize) -> Self {
        FitConfig {
            num_channels,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_channels == 0 {
            return Err(Error::Config("number of channels must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.skip_tol.is_nan() || self.skip_tol < 0.0 {
            return Err(Error::Config(format!(
                "skip tolerance must be nonnegative, got {}",
                self.skip_tol
            )));
        }
        if self.threads == 0 {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub iterations: usize,
    /// Largest absolute entry change in the last iteration.
    pub final_change: f64,
    pub converged: bool,
    /// Log-likelihood of the initial matrix followed by one value per
    /// iteration; empty unless tracing was requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub llk_trace: Vec<f64>,
    pub threads: usize,
    pub wall_time_secs: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// E-step for an observed edge: `P(e~_ikj = 1 | e_ij = 1)`.
///
/// Uses the cached-probability identity
/// `prod_{k' != k} (1 - p_ik' p_jk') = (1 - pi_ij) / (1 - p_ik p_jk)`.
pub fn estep_edge(p: &ParamMatrix, i: usize, j: usize, k: usize) -> Result<f64> {
    check_indices(p, i, j, k)?;
    let pi = row_edge_probability(p.row(i), p.row(j));
    if pi <= 0.0 {
        return Err(Error::ZeroProbabilityEdge { i, j });
    }
    Ok(edge_term(p.get(i, k), p.get(j, k), pi))
}

/// E-step for an observed non-edge: `p_ik - p_ik p_jk`.
pub fn estep_nonedge(p: &ParamMatrix, i: usize, j: usize, k: usize) -> Result<f64> {
    check_indices(p, i, j, k)?;
    let (pik, pjk) = (p.get(i, k), p.get(j, k));
    Ok(pik - pik * pjk)
}

fn check_indices(p: &ParamMatrix, i: usize, j: usize, k: usize) -> Result<()> {
    for idx in [i, j] {
        if idx >= p.num_nodes() {
            return Err(Error::NodeOutOfRange {
                index: idx,
                num_nodes: p.num_nodes(),
            });
        }
    }
    if i == j {
        return Err(Error::SelfPair(i));
    }
    if k >= p.num_channels() {
        return Err(Error::InvalidValue(format!("channel {k} out of range")));
    }
    Ok(())
}

/// `[x + p_ik (1 - p_jk)(1 - rest)] / pi` with `x = p_ik p_jk` and
/// `1 - rest = (pi - x) / (1 - x)`; `pi > 0` is the caller's job.
#[inline]
fn edge_term(pik: f64, pjk: f64, pi: f64) -> f64 {
    let x = pik * pjk;
    if x >= 1.0 {
        return 1.0;
    }
    let others = ((pi - x) / (1.0 - x)).max(0.0);
    (x + pik * (1.0 - pjk) * others) / pi
}

#[inline]
fn clamp_probability(v: f64) -> f64 {
    debug_assert!(
        (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v),
        "update left [0, 1]: {v}"
    );
    v.clamp(0.0, 1.0)
}

fn check_dims(g: &Graph, p: &Matrix) -> Result<()> {
    if p.rows() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows, graph has {} nodes",
            p.rows(),
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Pair status lookup for the reference fitter.
struct PairStatus {
    n: usize,
    status: Vec<u8>,
}

impl PairStatus {
    const NONEDGE: u8 = 0;
    const EDGE: u8 = 1;
    const MASKED: u8 = 2;

    fn new(g: &Graph) -> Self {
        let n = g.num_nodes();
        let mut status = vec![Self::NONEDGE; n * n];
        for i in 0..n {
            for &j in g.neighbors(i) {
                status[i * n + j] = Self::EDGE;
            }
            for &j in g.masked(i) {
                status[i * n + j] = Self::MASKED;
            }
        }
        PairStatus { n, status }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> u8 {
        self.status[i * self.n + j]
    }
}

/// One synchronous sweep of the reference update over every pair.
fn naive_sweep(g: &Graph, status: &PairStatus, p: &Matrix, next: &mut Matrix) -> Result<()> {
    let n = g.num_nodes();
    let kk = p.cols();
    for i in 0..n {
        let known = g.known_pair_count(i);
        if known == 0 {
            next.row_mut(i).copy_from_slice(p.row(i));
            continue;
        }
        for k in 0..kk {
            let pik = p.get(i, k);
            let mut sum = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let pjk = p.get(j, k);
                match status.get(i, j) {
                    PairStatus::MASKED => {}
                    PairStatus::EDGE => {
                        let (ri, rj) = (p.row(i), p.row(j));
                        let pi = row_edge_probability(ri, rj);
                        if pi <= 0.0 {
                            return Err(Error::ZeroProbabilityEdge { i, j });
                        }
                        let others = one_minus_product(
                            (0..kk).filter(|&c| c != k).map(|c| ri[c] * rj[c]),
                        );
                        sum += (pik * pjk + pik * (1.0 - pjk) * others) / pi;
                    }
                    _ => sum += pik - pik * pjk,
                }
            }
            next.set(i, k, clamp_probability(sum / known as f64));
        }
    }
    Ok(())
}

/// Per-row scratch for the cached sweep.
#[derive(Default)]
struct RowScratch {
    edge_sum: Vec<f64>,
    complement_sum: Vec<f64>,
}

/// Cached update of row `i`.
fn efficient_row(
    g: &Graph,
    p: &Matrix,
    col_sums: &[f64],
    skip_tol: f64,
    i: usize,
    out: &mut [f64],
    scratch: &mut RowScratch,
) -> Result<()> {
    let n = g.num_nodes();
    let kk = p.cols();
    let row_i = p.row(i);
    let masked = g.masked(i);
    let known = n - 1 - masked.len();
    if known == 0 {
        out.copy_from_slice(row_i);
        return Ok(());
    }

    scratch.edge_sum.clear();
    scratch.edge_sum.resize(kk, 0.0);
    scratch.complement_sum.clear();
    scratch.complement_sum.resize(kk, 0.0);

    // sum over j in E_i and M_i of (1 - p_jk)
    for &j in masked {
        for (acc, pjk) in scratch.complement_sum.iter_mut().zip(p.row(j)) {
            *acc += 1.0 - pjk;
        }
    }
    for &j in g.neighbors(i) {
        let row_j = p.row(j);
        let pi = row_edge_probability(row_i, row_j);
        if pi <= 0.0 {
            return Err(Error::ZeroProbabilityEdge { i, j });
        }
        for k in 0..kk {
            let (pik, pjk) = (row_i[k], row_j[k]);
            scratch.complement_sum[k] += 1.0 - pjk;
            if pik >= skip_tol {
                scratch.edge_sum[k] += edge_term(pik, pjk, pi);
            }
        }
    }

    let denom = known as f64;
    for k in 0..kk {
        let pik = row_i[k];
        if pik < skip_tol {
            out[k] = pik;
            continue;
        }
        // sum over known non-edges j of (p_ik - p_ik p_jk)
        let nonedge = pik * ((n as f64 - col_sums[k]) - (1.0 - pik) - scratch.complement_sum[k]);
        out[k] = clamp_probability((scratch.edge_sum[k] + nonedge) / denom);
    }
    Ok(())
}

fn efficient_sweep(
    g: &Graph,
    p: &Matrix,
    next: &mut Matrix,
    skip_tol: f64,
    pool: &rayon::ThreadPool,
) -> Result<()> {
    let col_sums = p.column_sums();
    let kk = p.cols();
    pool.install(|| {
        next.as_mut_slice()
            .par_chunks_mut(kk)
            .enumerate()
            .try_for_each_init(RowScratch::default, |scratch, (i, out)| {
                efficient_row(g, p, &col_sums, skip_tol, i, out, scratch)
            })
    })
}

/// One reference EM update of `p`.
pub fn naive_update(g: &Graph, p: &ParamMatrix) -> Result<ParamMatrix> {
    check_dims(g, p)?;
    let mut next = Matrix::zeros(p.rows(), p.cols());
    naive_sweep(g, &PairStatus::new(g), p, &mut next)?;
    Ok(ParamMatrix::from_matrix_unchecked(next))
}

/// One cached EM update of `p` on the current thread pool.
pub fn efficient_update(g: &Graph, p: &ParamMatrix, skip_tol: f64) -> Result<ParamMatrix> {
    check_dims(g, p)?;
    let mut next = Matrix::zeros(p.rows(), p.cols());
    let col_sums = p.column_sums();
    let mut scratch = RowScratch::default();
    for (i, out) in next.as_mut_slice().chunks_mut(p.cols()).enumerate() {
        efficient_row(g, p, &col_sums, skip_tol, i, out, &mut scratch)?;
    }
    Ok(ParamMatrix::from_matrix_unchecked(next))
}

/// Starting matrix: the warm start if given, otherwise Uniform(0, 1) from the seed.
pub fn initial_matrix(g: &Graph, cfg: &FitConfig) -> Result<ParamMatrix> {
    match &cfg.init {
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
            ParamMatrix::new(m.clone())
        }
        None => Ok(ParamMatrix::random_uniform(
            g.num_nodes(),
            cfg.num_channels,
            cfg.seed,
        )),
    }
}

fn degenerate_row_warnings(g: &Graph) -> Vec<String> {
    (0..g.num_nodes())
        .filter(|&i| g.num_nodes() > 0 && g.known_pair_count(i) == 0)
        .map(|i| {
            let msg = format!("node {i} has no known pairs; its row stays at the initial value");
            log::warn!("{msg}");
            msg
        })
        .collect()
}

/// Iterate `sweep` from the initial matrix until the largest entry change
/// drops below `tol` or `max_iters` is reached.
fn drive<S>(
    g: &Graph,
    cfg: &FitConfig,
    mut sweep: S,
    observer: &mut dyn FnMut(usize, &ParamMatrix),
) -> Result<(ParamMatrix, FitReport)>
where
    S: FnMut(&Matrix, &mut Matrix) -> Result<()>,
{
    cfg.validate()?;
    let start = Instant::now();
    let warnings = degenerate_row_warnings(g);
    let mut p = initial_matrix(g, cfg)?;
    let mut next = p.clone();
    let mut llk_trace = Vec::new();
    if cfg.trace_llk {
        llk_trace.push(log_likelihood(&p, g)?);
    }

    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < cfg.max_iters && change >= cfg.tol {
        sweep(&p, next.matrix_mut())?;
        iterations += 1;
        change = next.max_abs_diff(&p);
        std::mem::swap(&mut p, &mut next);
        if cfg.trace_llk {
            llk_trace.push(log_likelihood(&p, g)?);
        }
        observer(iterations, &p);
    }

    let report = FitReport {
        iterations,
        final_change: change,
        converged: change < cfg.tol,
        llk_trace,
        threads: cfg.threads,
        wall_time_secs: start.elapsed().as_secs_f64(),
        warnings,
    };
    Ok((p, report))
}

/// Reference fitter: direct transcription of the E- and M-steps over all pairs.
pub fn fit_naive(g: &Graph, cfg: &FitConfig) -> Result<(ParamMatrix, FitReport)> {
    fit_naive_with_observer(g, cfg, &mut |_, _| {})
}

/// As [`fit_naive`], calling `observer(iteration, p)` after every iteration.
pub fn fit_naive_with_observer(
    g: &Graph,
    cfg: &FitConfig,
    observer: &mut dyn FnMut(usize, &ParamMatrix),
) -> Result<(ParamMatrix, FitReport)> {
    let status = PairStatus::new(g);
    drive(g, cfg, |p, next| naive_sweep(g, &status, p, next), observer)
}

/// Cached, row-parallel fitter.
pub fn fit_efficient(g: &Graph, cfg: &FitConfig) -> Result<(ParamMatrix, FitReport)> {
    fit_efficient_with_observer(g, cfg, &mut |_, _| {})
}

/// As [`fit_efficient`], calling `observer(iteration, p)` after every iteration.
pub fn fit_efficient_with_observer(
    g: &Graph,
    cfg: &FitConfig,
    observer: &mut dyn FnMut(usize, &ParamMatrix),
) -> Result<(ParamMatrix, FitReport)> {
    cfg.validate()?;
    let pool = cfg.thread_pool()?;
    drive(
        g,
        cfg,
        |p, next| efficient_sweep(g, p, next, cfg.skip_tol, &pool),
        observer,
    )
}

/// Edge probabilities for the given pairs.
pub fn predict(p: &ParamMatrix, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(i, j)| crate::model::edge_probability(p, i, j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::apply_mask;
    use rand::Rng as _;

    fn pm(rows: &[&[f64]]) -> ParamMatrix {
        ParamMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_graph(n: usize, density: f64, seed: u64) -> Graph {
        let mut rng = crate::seed::rng(seed);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    pairs.push((i, j));
                }
            }
        }
        Graph::from_edges(n, pairs).unwrap()
    }

    #[test]
    fn estep_edge_cases() {
        let p = pm(&[&[1.0], &[1.0]]);
        assert_eq!(estep_edge(&p, 0, 1, 0).unwrap(), 1.0);
        let p = pm(&[&[0.0, 0.4], &[0.8, 0.9]]);
        assert_eq!(estep_edge(&p, 0, 1, 0).unwrap(), 0.0);
        let p = pm(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let v = estep_edge(&p, 0, 1, 0).unwrap();
        assert!((v - (0.25 + 0.5 * 0.5 * 0.25) / 0.4375).abs() < 1e-15);
        assert!((v - 0.7143).abs() < 1e-4);
        let p = pm(&[&[0.0], &[0.9]]);
        assert!(matches!(estep_edge(&p, 0, 1, 0), Err(Error::ZeroProbabilityEdge { .. })));
    }

    #[test]
    fn estep_edge_saturated_channel_takes_limit() {
        let p = pm(&[&[1.0, 0.3], &[1.0, 0.6]]);
        assert_eq!(estep_edge(&p, 0, 1, 0).unwrap(), 1.0);
        // p_i1 = 0.3 is a plain Bernoulli draw once channel 0 explains the edge
        assert!((estep_edge(&p, 0, 1, 1).unwrap() - 0.3).abs() < 1e-15);
    }

    /// Conditional frequency of the latent half-edge given that the pair
    /// shares an observed edge.
    #[test]
    fn estep_edge_agrees_with_conditional_sampling() {
        let p = pm(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let mut rng = crate::seed::rng(5);
        let (mut edges, mut half) = (0usize, 0usize);
        for _ in 0..1_000_000 {
            let a: Vec<bool> = (0..2).map(|_| rng.random::<f64>() < 0.5).collect();
            let b: Vec<bool> = (0..2).map(|_| rng.random::<f64>() < 0.5).collect();
            if (0..2).any(|c| a[c] && b[c]) {
                edges += 1;
                half += usize::from(a[0]);
            }
        }
        let freq = half as f64 / edges as f64;
        let expected = estep_edge(&p, 0, 1, 0).unwrap();
        let sigma = (expected * (1.0 - expected) / edges as f64).sqrt();
        assert!((freq - expected).abs() < 3.0 * sigma, "{freq} vs {expected}");
    }

    #[test]
    fn estep_nonedge_cases() {
        let p = pm(&[&[0.7], &[1.0]]);
        assert_eq!(estep_nonedge(&p, 0, 1, 0).unwrap(), 0.0);
        let p = pm(&[&[0.7], &[0.0]]);
        assert_eq!(estep_nonedge(&p, 0, 1, 0).unwrap(), 0.7);
        let p = pm(&[&[0.5], &[0.5]]);
        assert_eq!(estep_nonedge(&p, 0, 1, 0).unwrap(), 0.25);
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::with_channels(0).validate().is_err());
        let cfg = FitConfig {
            tol: 0.0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = FitConfig {
            skip_tol: -1.0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!(FitConfig::default().tol, 1e-4);
        assert_eq!(FitConfig::default().skip_tol, 1e-10);
        assert_eq!(FitConfig::default().max_iters, 10_000);
    }

    #[test]
    fn zero_column_stays_zero() {
        let g = random_graph(20, 0.3, 1);
        let mut init = Matrix::random_uniform(20, 3, 2);
        for i in 0..20 {
            init.set(i, 1, 0.0);
        }
        let cfg = FitConfig {
            num_channels: 3,
            max_iters: 50,
            skip_tol: 0.0,
            init: Some(init),
            ..FitConfig::default()
        };
        for fit in [fit_naive, fit_efficient] {
            let (p, _) = fit(&g, &cfg).unwrap();
            assert!((0..20).all(|i| p.get(i, 1) == 0.0));
        }
    }

    #[test]
    fn saturated_complete_graph_is_a_fixed_point() {
        let pairs: Vec<_> = (0..5).flat_map(|i| ((i + 1)..5).map(move |j| (i, j))).collect();
        let g = Graph::from_edges(5, pairs).unwrap();
        let cfg = FitConfig {
            num_channels: 2,
            init: Some(Matrix::filled(5, 2, 1.0)),
            ..FitConfig::default()
        };
        for fit in [fit_naive, fit_efficient] {
            let (p, report) = fit(&g, &cfg).unwrap();
            assert_eq!(report.iterations, 1);
            assert!(report.converged);
            assert_eq!(report.final_change, 0.0);
            assert!(p.as_slice().iter().all(|&v| v == 1.0));
        }
    }

    /// Two nodes and one edge: the likelihood `log(p0 p1)` is maximized on the
    /// boundary `p0 = p1 = 1`, which a grid search confirms.
    #[test]
    fn single_edge_climbs_to_boundary() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let cfg = FitConfig {
            num_channels: 1,
            seed: 3,
            trace_llk: true,
            max_iters: 1000,
            tol: 1e-12,
            ..FitConfig::default()
        };
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for a in 0..=100 {
            for b in 0..=100 {
                let (x, y) = (a as f64 / 100.0, b as f64 / 100.0);
                let l = (x * y).ln();
                if l > best.0 {
                    best = (l, x, y);
                }
            }
        }
        assert_eq!((best.1, best.2), (1.0, 1.0));
        for fit in [fit_naive, fit_efficient] {
            let (p, report) = fit(&g, &cfg).unwrap();
            assert!(p.get(0, 0) > 0.999 && p.get(1, 0) > 0.999);
            for w in report.llk_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8 * w[0].abs());
            }
        }
    }

    #[test]
    fn efficient_matches_naive_iterates() {
        for seed in 0..4 {
            let g = random_graph(25, 0.2, seed);
            let (g, _) = apply_mask(&g, seed, 3, 5).unwrap();
            let cfg = FitConfig {
                num_channels: 3,
                max_iters: 60,
                tol: 1e-14,
                seed,
                ..FitConfig::default()
            };
            let mut naive = Vec::new();
            fit_naive_with_observer(&g, &cfg, &mut |_, p| naive.push(p.clone())).unwrap();
            let mut it = 0;
            fit_efficient_with_observer(&g, &cfg, &mut |_, p| {
                assert!(p.max_abs_diff(&naive[it]) < 1e-10);
                it += 1;
            })
            .unwrap();
            assert_eq!(it, naive.len());
        }
    }

    #[test]
    fn masked_denominator_excludes_masked_pairs() {
        // Node 0 of a 6-node graph with pair (0, 1) masked: the update averages
        // over N - |M_0| - 1 = 4 known pairs.
        let g = Graph::from_edges(6, [(0, 2), (1, 3), (3, 4)]).unwrap();
        let g = g.with_masked([(0, 1)]).unwrap();
        let p = ParamMatrix::random_uniform(6, 2, 9);
        let next = efficient_update(&g, &p, 0.0).unwrap();
        for k in 0..2 {
            let mut sum = estep_edge(&p, 0, 2, k).unwrap();
            for j in [3, 4, 5] {
                sum += estep_nonedge(&p, 0, j, k).unwrap();
            }
            assert!((next.get(0, k) - sum / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fully_masked_node_keeps_initial_row() {
        let g = Graph::from_edges(4, [(1, 2), (2, 3)]).unwrap();
        let g = g.with_masked([(0, 1), (0, 2), (0, 3)]).unwrap();
        let cfg = FitConfig {
            num_channels: 2,
            max_iters: 20,
            ..FitConfig::default()
        };
        let init = initial_matrix(&g, &cfg).unwrap();
        for fit in [fit_naive, fit_efficient] {
            let (p, report) = fit(&g, &cfg).unwrap();
            assert_eq!(p.row(0), init.row(0));
            assert_eq!(report.warnings.len(), 1);
        }
    }

    #[test]
    fn skip_tolerance_changes_little() {
        let g = random_graph(40, 0.15, 8);
        let base = FitConfig {
            num_channels: 4,
            seed: 8,
            max_iters: 3000,
            ..FitConfig::default()
        };
        let (a, ra) = fit_efficient(&g, &FitConfig { skip_tol: 0.0, ..base.clone() }).unwrap();
        let (b, rb) = fit_efficient(&g, &base).unwrap();
        assert!(ra.converged && rb.converged);
        assert!(a.max_abs_diff(&b) < 1e-3, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let g = random_graph(60, 0.1, 4);
        let cfg = FitConfig {
            num_channels: 4,
            max_iters: 40,
            ..FitConfig::default()
        };
        let (a, _) = fit_efficient(&g, &cfg).unwrap();
        let (b, _) = fit_efficient(&g, &FitConfig { threads: 3, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_cases() {
        let p = ParamMatrix::zeros(3, 2);
        assert_eq!(predict(&p, &[(0, 1), (1, 2)]).unwrap(), vec![0.0, 0.0]);
        let p = pm(&[&[1.0, 0.0], &[1.0, 0.2]]);
        assert_eq!(predict(&p, &[(0, 1)]).unwrap(), vec![1.0]);
        assert!(predict(&p, &[(1, 1)]).is_err());
    }

    #[test]
    fn warm_start_dimension_checked() {
        let g = random_graph(5, 0.5, 0);
        let cfg = FitConfig {
            num_channels: 2,
            init: Some(Matrix::zeros(4, 2)),
            ..FitConfig::default()
        };
        assert!(matches!(fit_efficient(&g, &cfg), Err(Error::Dimension(_))));
    }
}
