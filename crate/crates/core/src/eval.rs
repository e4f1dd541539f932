//! Tie-aware AUC and the repeated masked-holdout experiment harness.
//!
//! One repetition draws (or takes) a graph, masks a random set of edges and
//! non-edges, picks an equally sized in-sample set from the pairs that remain
//! known, then fits every requested model at every channel count and scores
//! both sets. Cells are independent jobs seeded from
//! `(base seed, repetition, model, K)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bkn::{bkn_fit, bkn_predict};
use crate::em::{fit_efficient, predict, FitConfig};
use crate::error::{Error, Result};
use crate::graph::{apply_mask, sample_known_pairs, Graph, MaskSet};
use crate::matrix::ParamMatrix;
use crate::model::row_edge_probability;
use crate::seed;
use crate::synth::{generate_lcn, generate_sbm, LcnGenSpec, SbmSpec, SbmTruth};

/// Area under the ROC curve, counting tied positive/negative scores as one
/// half. Computed from average ranks (Mann-Whitney U).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidValue(format!("score {s}")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (0-based) share their mean, 1-based
        let avg_rank = (start + end + 1) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&idx| labels[idx]).count();
        pos_rank_sum += avg_rank * positives as f64;
        start = end;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * q))
}

/// Mean squared difference between predicted and true probabilities over
/// `pairs`; NaN for an empty pair list.
pub fn mse_true_probs<P, T>(predicted: P, truth: T, pairs: &[(usize, usize)]) -> f64
where
    P: Fn(usize, usize) -> f64,
    T: Fn(usize, usize) -> f64,
{
    if pairs.is_empty() {
        return f64::NAN;
    }
    let sum: f64 = pairs
        .iter()
        .map(|&(i, j)| (predicted(i, j) - truth(i, j)).powi(2))
        .sum();
    sum / pairs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Lcn,
    Bkn,
}

impl ModelKind {
    fn tag(self) -> u64 {
        match self {
            ModelKind::Lcn => 1,
            ModelKind::Bkn => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lcn => "lcn",
            ModelKind::Bkn => "bkn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lcn" => Ok(ModelKind::Lcn),
            "bkn" => Ok(ModelKind::Bkn),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Where each repetition's graph comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Sbm(SbmSpec),
    Lcn(LcnGenSpec),
    /// The same observed graph every repetition; only the masks differ.
    Fixed(Arc<Graph>),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub source: GraphSource,
    pub models: Vec<ModelKind>,
    pub channels: Vec<usize>,
    pub holdout_edges: usize,
    pub holdout_nonedges: usize,
    pub in_sample_edges: usize,
    pub in_sample_nonedges: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Template for every fit; channel count and seed are set per cell.
    pub fit: FitConfig,
    /// Concurrent cells. Each fit runs single-threaded.
    pub threads: usize,
    /// Score predictions against the generator's true probabilities.
    pub compute_mse: bool,
}

impl ExperimentSpec {
    pub fn new(source: GraphSource, models: Vec<ModelKind>, channels: Vec<usize>) -> Self {
        ExperimentSpec {
            source,
            models,
            channels,
            holdout_edges: 500,
            holdout_nonedges: 500,
            in_sample_edges: 500,
            in_sample_nonedges: 500,
            repetitions: 10,
            base_seed: 0,
            fit: FitConfig::default(),
            threads: 1,
            compute_mse: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::Config("channel sweep values must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models requested".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub model: ModelKind,
    pub channels: usize,
    pub rep: usize,
    pub auc_in: Option<f64>,
    pub auc_out: Option<f64>,
    pub mse: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub channels: usize,
    /// Cells that produced scores.
    pub completed: usize,
    pub auc_in: MeanSe,
    pub auc_out: MeanSe,
    pub mse: Option<MeanSe>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Mean and `sd / sqrt(n)` with the `n - 1` sample deviation; SE is 0
    /// for a single value.
    pub fn of(values: &[f64]) -> MeanSe {
        let n = values.len();
        if n == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return MeanSe { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        MeanSe {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn summary_for(&self, model: ModelKind, channels: usize) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.model == model && r.channels == channels)
    }

    pub fn write_cells_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "model,K,rep,auc_in,auc_out,mse,converged,iterations,error")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.model,
                c.channels,
                c.rep,
                opt(c.auc_in),
                opt(c.auc_out),
                opt(c.mse),
                c.converged,
                c.iterations,
                c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "model,K,completed,auc_in_mean,auc_in_se,auc_out_mean,auc_out_se,mse_mean,mse_se"
        )?;
        for r in &self.summary {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.model,
                r.channels,
                r.completed,
                r.auc_in.mean,
                r.auc_in.se,
                r.auc_out.mean,
                r.auc_out.se,
                opt(r.mse.map(|m| m.mean)),
                opt(r.mse.map(|m| m.se)),
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

enum Truth {
    None,
    Sbm(SbmTruth),
    Lcn(ParamMatrix),
}

impl Truth {
    fn probability(&self, i: usize, j: usize) -> Option<f64> {
        match self {
            Truth::None => None,
            Truth::Sbm(t) => Some(t.probability(i, j)),
            Truth::Lcn(p) => Some(row_edge_probability(p.row(i), p.row(j))),
        }
    }
}

/// Graph, masks and scoring sets of one repetition.
struct Replicate {
    graph: Graph,
    holdout: MaskSet,
    in_pairs: Vec<(usize, usize)>,
    in_labels: Vec<bool>,
    truth: Truth,
}

const TAG_GRAPH: u64 = 0x6772;
const TAG_MASK: u64 = 0x6d61;
const TAG_IN_SAMPLE: u64 = 0x696e;

fn prepare(spec: &ExperimentSpec, rep: usize) -> Result<Replicate> {
    let rep_tag = rep as u64;
    let graph_seed = seed::derive(spec.base_seed, &[rep_tag, TAG_GRAPH]);
    let (full, truth) = match &spec.source {
        GraphSource::Sbm(s) => {
            let (g, t) = generate_sbm(&s.with_seed(graph_seed))?;
            (g, Truth::Sbm(t))
        }
        GraphSource::Lcn(s) => {
            let (g, p) = generate_lcn(&s.clone().with_seed(graph_seed))?;
            (g, Truth::Lcn(p))
        }
        GraphSource::Fixed(g) => ((**g).clone(), Truth::None),
    };
    let (graph, holdout) = apply_mask(
        &full,
        seed::derive(spec.base_seed, &[rep_tag, TAG_MASK]),
        spec.holdout_edges,
        spec.holdout_nonedges,
    )?;
    let mut rng = seed::rng(seed::derive(spec.base_seed, &[rep_tag, TAG_IN_SAMPLE]));
    let (edges, nonedges) = sample_known_pairs(
        &graph,
        &mut rng,
        spec.in_sample_edges,
        spec.in_sample_nonedges,
        &[],
    )?;
    let in_labels = std::iter::repeat_n(true, edges.len())
        .chain(std::iter::repeat_n(false, nonedges.len()))
        .collect();
    let mut in_pairs = edges;
    in_pairs.extend(nonedges);
    Ok(Replicate {
        graph,
        holdout,
        in_pairs,
        in_labels,
        truth,
    })
}

fn score_labels(scores: &[f64], labels: &[bool]) -> Option<f64> {
    auc(scores, labels).ok()
}

fn run_cell(
    spec: &ExperimentSpec,
    data: &Replicate,
    rep: usize,
    model: ModelKind,
    channels: usize,
) -> CellResult {
    let cfg = FitConfig {
        num_channels: channels,
        seed: seed::derive(spec.base_seed, &[rep as u64, model.tag(), channels as u64]),
        threads: 1,
        init: None,
        trace_llk: false,
        ..spec.fit.clone()
    };
    let out_pairs: Vec<(usize, usize)> = data.holdout.node_pairs().collect();
    let out_labels = data.holdout.labels();

    let scored = match model {
        ModelKind::Lcn => fit_efficient(&data.graph, &cfg).and_then(|(p, report)| {
            Ok((predict(&p, &out_pairs)?, predict(&p, &data.in_pairs)?, report))
        }),
        ModelKind::Bkn => bkn_fit(&data.graph, &cfg).and_then(|(fit, report)| {
            Ok((
                bkn_predict(&fit.theta, &out_pairs)?,
                bkn_predict(&fit.theta, &data.in_pairs)?,
                report,
            ))
        }),
    };

    match scored {
        Ok((out_scores, in_scores, report)) => {
            let mse = if spec.compute_mse {
                data.truth.probability(0, 1).map(|_| {
                    let lookup: std::collections::HashMap<(usize, usize), f64> =
                        out_pairs.iter().copied().zip(out_scores.iter().copied()).collect();
                    mse_true_probs(
                        |i, j| lookup[&(i, j)],
                        |i, j| data.truth.probability(i, j).unwrap_or(f64::NAN),
                        &out_pairs,
                    )
                })
            } else {
                None
            };
            CellResult {
                model,
                channels,
                rep,
                auc_in: score_labels(&in_scores, &data.in_labels),
                auc_out: score_labels(&out_scores, &out_labels),
                mse,
                converged: report.converged,
                iterations: report.iterations,
                error: None,
            }
        }
        Err(e) => {
            log::warn!("{model} K={channels} rep={rep} failed: {e}");
            CellResult {
                model,
                channels,
                rep,
                auc_in: None,
                auc_out: None,
                mse: None,
                converged: false,
                iterations: 0,
                error: Some(e.to_string()),
            }
        }
    }
}

fn summarize(spec: &ExperimentSpec, cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &k in &spec.channels {
        for &model in &spec.models {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.model == model && c.channels == k && c.auc_out.is_some())
                .collect();
            let collect = |f: fn(&CellResult) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(|c| f(c)).collect()
            };
            let mse = collect(|c| c.mse);
            rows.push(SummaryRow {
                model,
                channels: k,
                completed: group.len(),
                auc_in: MeanSe::of(&collect(|c| c.auc_in)),
                auc_out: MeanSe::of(&collect(|c| c.auc_out)),
                mse: (!mse.is_empty()).then(|| MeanSe::of(&mse)),
            });
        }
    }
    rows
}

/// Run the full sweep. Setup failures (e.g. a graph too small for the
/// holdout) abort; fitter failures are recorded per cell.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut cells = Vec::new();
    for rep in 0..spec.repetitions {
        let data = prepare(spec, rep)?;
        let jobs: Vec<(ModelKind, usize)> = spec
            .channels
            .iter()
            .flat_map(|&k| spec.models.iter().map(move |&m| (m, k)))
            .collect();
        let rep_cells: Vec<CellResult> = pool.install(|| {
            jobs.par_iter()
                .map(|&(model, k)| run_cell(spec, &data, rep, model, k))
                .collect()
        });
        for c in &rep_cells {
            log::info!(
                "rep {rep} {} K={}: auc_in={:?} auc_out={:?} iterations={}",
                c.model,
                c.channels,
                c.auc_in,
                c.auc_out,
                c.iterations
            );
        }
        cells.extend(rep_cells);
    }
    let summary = summarize(spec, &cells);
    Ok(ExperimentResult { cells, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive positive/negative pair comparison.
    fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
        let mut credit = 0.0;
        let mut pairs = 0.0;
        for (s_pos, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
            for (s_neg, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
                pairs += 1.0;
                if s_pos > s_neg {
                    credit += 1.0;
                } else if s_pos == s_neg {
                    credit += 0.5;
                }
            }
        }
        credit / pairs
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        let (s, l) = ([0.9, 0.1, 0.9], [true, false, false]);
        assert_eq!(auc_oracle(&s, &l), 0.75);
        assert_eq!(auc(&s, &l).unwrap(), 0.75);
    }

    #[test]
    fn auc_errors() {
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(Error::SingleClass)));
        assert!(matches!(auc(&[], &[]), Err(Error::SingleClass)));
        assert!(auc(&[0.1], &[true, false]).is_err());
        assert!(auc(&[f64::NAN, 0.2], &[true, false]).is_err());
    }

    #[test]
    fn mse_cases() {
        let pairs = [(0, 1), (1, 2), (0, 2)];
        assert_eq!(mse_true_probs(|i, j| (i + j) as f64, |i, j| (i + j) as f64, &pairs), 0.0);
        assert_eq!(mse_true_probs(|_, _| 0.5, |_, _| 0.5, &pairs), 0.0);
        assert_eq!(mse_true_probs(|_, _| 0.0, |_, _| 0.5, &pairs), 0.25);
        assert!(mse_true_probs(|_, _| 0.0, |_, _| 0.5, &[]).is_nan());
    }

    #[test]
    fn mean_se() {
        let one = MeanSe::of(&[0.7]);
        assert_eq!((one.mean, one.se), (0.7, 0.0));
        let m = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("LCN".parse::<ModelKind>().unwrap(), ModelKind::Lcn);
        assert_eq!("bkn".parse::<ModelKind>().unwrap(), ModelKind::Bkn);
        assert!("both".parse::<ModelKind>().is_err());
        assert_eq!(ModelKind::Bkn.to_string(), "bkn");
    }

    fn tiny_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(
            GraphSource::Sbm(SbmSpec::new(2, 8, 0.6, 0.1)),
            vec![ModelKind::Lcn],
            vec![1],
        );
        spec.holdout_edges = 4;
        spec.holdout_nonedges = 4;
        spec.in_sample_edges = 4;
        spec.in_sample_nonedges = 4;
        spec.repetitions = 1;
        spec.fit.max_iters = 50;
        spec
    }

    #[test]
    fn single_cell_has_zero_se() {
        let res = run_experiment(&tiny_spec()).unwrap();
        assert_eq!(res.cells.len(), 1);
        let row = res.summary_for(ModelKind::Lcn, 1).unwrap();
        assert_eq!(row.completed, 1);
        assert_eq!(row.auc_out.se, 0.0);
        assert_eq!(row.auc_in.se, 0.0);
        assert_eq!(Some(row.auc_out.mean), res.cells[0].auc_out);
    }

    #[test]
    fn harness_is_deterministic_across_thread_counts() {
        let mut spec = tiny_spec();
        spec.models = vec![ModelKind::Lcn, ModelKind::Bkn];
        spec.channels = vec![1, 2];
        spec.repetitions = 2;
        spec.compute_mse = true;
        let a = run_experiment(&spec).unwrap();
        spec.threads = 3;
        let b = run_experiment(&spec).unwrap();
        let csv = |r: &ExperimentResult| {
            let mut cells = Vec::new();
            r.write_cells_csv(&mut cells).unwrap();
            let mut summary = Vec::new();
            r.write_summary_csv(&mut summary).unwrap();
            (cells, summary)
        };
        assert_eq!(csv(&a), csv(&b));
        assert_eq!(a.cells.len(), 8);
        assert!(a.cells.iter().all(|c| c.mse.is_some()));
    }

    #[test]
    fn oversized_holdout_is_a_setup_error() {
        let mut spec = tiny_spec();
        spec.holdout_edges = 10_000;
        assert!(matches!(run_experiment(&spec), Err(Error::InsufficientPairs { .. })));
    }

    #[test]
    fn in_sample_pairs_avoid_holdout() {
        let spec = tiny_spec();
        let data = prepare(&spec, 0).unwrap();
        for &(i, j) in &data.in_pairs {
            assert!(!data.graph.is_masked(i, j));
        }
        assert_eq!(data.in_labels.iter().filter(|&&l| l).count(), 4);
    }

    #[test]
    fn fixed_graph_without_truth_has_no_mse() {
        let (g, _) = generate_sbm(&SbmSpec::new(2, 8, 0.6, 0.1)).unwrap();
        let mut spec = tiny_spec();
        spec.source = GraphSource::Fixed(Arc::new(g));
        spec.compute_mse = true;
        let res = run_experiment(&spec).unwrap();
        assert!(res.cells[0].mse.is_none());
        assert!(res.summary[0].mse.is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn auc_matches_pair_oracle(
            data in prop::collection::vec((0u8..20, any::<bool>()), 2..300)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s) / 7.0).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let fast = auc(&scores, &labels).unwrap();
            prop_assert!((fast - auc_oracle(&scores, &labels)).abs() < 1e-12);
        }

        #[test]
        fn auc_complement_and_monotone_invariance(
            data in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..200)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| (s * 4.0).round() / 4.0).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
            let a = auc(&scores, &labels).unwrap();
            prop_assert_eq!(a + auc(&scores, &flipped).unwrap(), 1.0);
            let transformed: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(auc(&transformed, &labels).unwrap(), a);
        }
    }
}
