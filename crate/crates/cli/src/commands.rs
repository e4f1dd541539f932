use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lcn_core::bkn::{bkn_fit, bkn_predict};
use lcn_core::em::{fit_efficient, fit_naive, predict as lcn_predict};
use lcn_core::eval::{auc, run_experiment, ExperimentSpec, GraphSource, ModelKind};
use lcn_core::model::{channel_sizes, channel_usage, expected_connections};
use lcn_core::report::{order_for_heatmap, render_heatmap, usage_table};
use lcn_core::synth::{
    generate_lcn, generate_sbm, sbm_bayes_auc, DegreeProfile, LcnGenSpec, SbmSpec, Sparsity,
};
use lcn_core::{FitConfig, FitReport, Graph, Matrix, NodeMetadata, ParamMatrix};
use serde::Serialize;

use crate::{
    CliError, Common, EvaluateArgs, FitArgs, FitKnobs, Generator, HeatmapArgs, LcnFlags, ModelArg,
    ModelChoice, PredictArgs, ProfileArg, SbmFlags, SimulateArgs, SparsityArg, StatsArgs,
};

type Result<T> = std::result::Result<T, CliError>;
type PairList = Vec<(usize, usize)>;

fn out_path(common: &Common, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&common.out_dir)?;
    Ok(common.out_dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// One JSON document on stdout; logs stay on stderr.
fn emit_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn check_threads(common: &Common) -> Result<()> {
    if common.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1\n".into()));
    }
    Ok(())
}

/// `i j` or `i j status` lines. Returns the pairs and, when every line has
/// one, the statuses.
fn parse_pairs(path: &Path) -> Result<(PairList, Option<Vec<bool>>)> {
    let file = File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    let mut all_labelled = true;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = |msg: String| {
            CliError::Core(lcn_core::Error::Parse {
                line: n + 1,
                message: msg,
            })
        };
        let fields: Vec<&str> = t.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(bad(format!("expected `i j` or `i j status`, found {} fields", fields.len())));
        }
        let id = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("`{s}` is not a node id")));
        pairs.push((id(fields[0])?, id(fields[1])?));
        match fields.get(2) {
            Some(&"0") => labels.push(false),
            Some(&"1") => labels.push(true),
            Some(other) => return Err(bad(format!("status must be 0 or 1, found `{other}`"))),
            None => all_labelled = false,
        }
    }
    Ok((pairs, all_labelled.then_some(labels).filter(|l| !l.is_empty())))
}

fn fit_config(knobs: &FitKnobs, common: &Common, channels: usize) -> FitConfig {
    FitConfig {
        num_channels: channels,
        max_iters: knobs.max_iters,
        tol: knobs.tol,
        skip_tol: knobs.skip_tol,
        seed: common.seed,
        threads: common.threads,
        ..FitConfig::default()
    }
}

#[derive(Serialize)]
struct FitRecord<'a> {
    model: &'static str,
    channels: usize,
    nodes: usize,
    edges: usize,
    masked: usize,
    seed: u64,
    #[serde(flatten)]
    report: &'a FitReport,
}

pub fn fit(a: &FitArgs) -> Result<()> {
    check_threads(&a.common)?;
    let mut g = Graph::load_edge_list(&a.graph, a.num_nodes)?;
    if let Some(mask) = &a.mask {
        let (pairs, _) = parse_pairs(mask)?;
        g = g.with_masked(pairs)?;
    }
    let mut cfg = fit_config(&a.knobs, &a.common, a.channels);
    cfg.trace_llk = a.trace_llk;
    if let Some(init) = &a.init {
        cfg.init = Some(Matrix::load_tsv(init)?);
    }
    log::info!(
        "fitting {:?} with K={} on {} nodes, {} edges, {} masked pairs",
        a.model,
        a.channels,
        g.num_nodes(),
        g.num_edges(),
        g.num_masked()
    );
    let (params, report, model) = match a.model {
        ModelArg::Lcn => {
            let (p, r) = if a.naive { fit_naive(&g, &cfg)? } else { fit_efficient(&g, &cfg)? };
            (p.into_inner(), r, "lcn")
        }
        ModelArg::Bkn => {
            let (b, r) = bkn_fit(&g, &cfg)?;
            (b.theta, r, "bkn")
        }
    };
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if !report.converged {
        log::warn!(
            "stopped after {} iterations without converging (last change {:.3e})",
            report.iterations,
            report.final_change
        );
    }
    params.save_tsv(out_path(&a.common, "params.tsv")?)?;
    if a.trace_llk {
        let mut w = create(&out_path(&a.common, "llk_trace.csv")?)?;
        writeln!(w, "iteration,log_likelihood")?;
        for (it, v) in report.llk_trace.iter().enumerate() {
            writeln!(w, "{it},{v}")?;
        }
        w.flush()?;
    }
    let record = FitRecord {
        model,
        channels: a.channels,
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        masked: g.num_masked(),
        seed: a.common.seed,
        report: &report,
    };
    let mut w = create(&out_path(&a.common, "report.jsonl")?)?;
    serde_json::to_writer(&mut w, &record)?;
    writeln!(w)?;
    w.flush()?;
    emit_json(&record)
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let (pairs, labels) = parse_pairs(&a.pairs)?;
    let scores = match a.model {
        ModelArg::Lcn => lcn_predict(&ParamMatrix::load_tsv(&a.params)?, &pairs)?,
        ModelArg::Bkn => bkn_predict(&Matrix::load_tsv(&a.params)?, &pairs)?,
    };
    let mut w = create(&out_path(&a.common, "scores.tsv")?)?;
    for (idx, ((i, j), s)) in pairs.iter().zip(&scores).enumerate() {
        match &labels {
            Some(l) => writeln!(w, "{i}\t{j}\t{s:.16e}\t{}", u8::from(l[idx]))?,
            None => writeln!(w, "{i}\t{j}\t{s:.16e}")?,
        }
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Summary {
        pairs: usize,
        auc: Option<f64>,
    }
    let auc = match &labels {
        Some(l) => Some(auc(&scores, l)?),
        None => None,
    };
    emit_json(&Summary {
        pairs: pairs.len(),
        auc,
    })
}

fn sbm_spec(f: &SbmFlags, seed: u64) -> SbmSpec {
    SbmSpec::new(f.blocks, f.block_size, f.p_in, f.p_out).with_seed(seed)
}

fn lcn_spec(f: &LcnFlags, seed: u64) -> LcnGenSpec {
    let sparsity = match f.sparsity {
        SparsityArg::Sparse => Sparsity::Sparse,
        SparsityArg::Dense => Sparsity::Dense,
    };
    let profile = match f.profile {
        ProfileArg::Skewed => DegreeProfile::Skewed,
        ProfileArg::Uniform => DegreeProfile::Uniform,
    };
    LcnGenSpec::new(f.nodes, f.true_channels, sparsity, profile).with_seed(seed)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    check_threads(&a.common)?;
    let source = match &a.graph {
        Some(path) => GraphSource::Fixed(Arc::new(Graph::load_edge_list(path, a.num_nodes)?)),
        None => match a.generator {
            Generator::Sbm => GraphSource::Sbm(sbm_spec(&a.sbm, a.common.seed)),
            Generator::Lcn => GraphSource::Lcn(lcn_spec(&a.lcn, a.common.seed)),
        },
    };
    let models = match a.model {
        ModelChoice::Lcn => vec![ModelKind::Lcn],
        ModelChoice::Bkn => vec![ModelKind::Bkn],
        ModelChoice::Both => vec![ModelKind::Lcn, ModelKind::Bkn],
    };
    let mut spec = ExperimentSpec::new(source, models, a.channels.clone());
    spec.holdout_edges = a.holdout_edges;
    spec.holdout_nonedges = a.holdout_nonedges;
    spec.in_sample_edges = a.in_sample_edges;
    spec.in_sample_nonedges = a.in_sample_nonedges;
    spec.repetitions = a.reps;
    spec.base_seed = a.common.seed;
    spec.fit = fit_config(&a.knobs, &a.common, 1);
    spec.threads = a.common.threads;
    spec.compute_mse = a.mse;
    let result = run_experiment(&spec)?;
    result.write_cells_csv(create(&out_path(&a.common, "cells.csv")?)?)?;
    result.write_summary_csv(create(&out_path(&a.common, "summary.csv")?)?)?;
    result.write_summary_csv(std::io::stdout().lock())?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Summary {
        generator: &'static str,
        nodes: usize,
        edges: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        bayes_auc: Option<f64>,
    }
    let summary = match a.kind {
        Generator::Sbm => {
            let spec = sbm_spec(&a.sbm, a.common.seed);
            let (g, truth) = generate_sbm(&spec)?;
            g.save_edge_list(out_path(&a.common, "edges.txt")?)?;
            let mut w = create(&out_path(&a.common, "blocks.tsv")?)?;
            for i in 0..g.num_nodes() {
                writeln!(w, "{i}\t{}", truth.block(i))?;
            }
            w.flush()?;
            Summary {
                generator: "sbm",
                nodes: g.num_nodes(),
                edges: g.num_edges(),
                bayes_auc: Some(sbm_bayes_auc(&spec)?),
            }
        }
        Generator::Lcn => {
            let (g, p) = generate_lcn(&lcn_spec(&a.lcn, a.common.seed))?;
            g.save_edge_list(out_path(&a.common, "edges.txt")?)?;
            p.save_tsv(out_path(&a.common, "p_true.tsv")?)?;
            Summary {
                generator: "lcn",
                nodes: g.num_nodes(),
                edges: g.num_edges(),
                bayes_auc: None,
            }
        }
    };
    emit_json(&summary)
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let p = ParamMatrix::load_tsv(&a.params)?;
    let sizes = channel_sizes(&p);
    let usage = channel_usage(&p, a.threshold)?;

    let mut w = create(&out_path(&a.common, "channel_sizes.tsv")?)?;
    for (k, s) in sizes.iter().enumerate() {
        writeln!(w, "{k}\t{s:.16e}")?;
    }
    w.flush()?;
    let mut w = create(&out_path(&a.common, "node_usage.tsv")?)?;
    for (i, u) in usage.per_node.iter().enumerate() {
        writeln!(w, "{i}\t{u}")?;
    }
    w.flush()?;

    if let Some(path) = &a.graph {
        let g = Graph::load_edge_list(path, Some(p.num_nodes()))?;
        let mut c = Matrix::zeros(p.num_nodes(), p.num_channels());
        for i in 0..p.num_nodes() {
            for k in 0..p.num_channels() {
                c.set(i, k, expected_connections(&p, &g, i, k)?);
            }
        }
        c.save_tsv(out_path(&a.common, "connections.tsv")?)?;
    }

    #[derive(Serialize)]
    struct Summary {
        nodes: usize,
        channels: usize,
        channel_sizes: Vec<f64>,
        total: f64,
        sparsity: f64,
        mean_usage: f64,
    }
    let n = usage.per_node.len();
    emit_json(&Summary {
        nodes: p.num_nodes(),
        channels: p.num_channels(),
        total: sizes.iter().sum(),
        channel_sizes: sizes,
        sparsity: usage.sparsity,
        mean_usage: if n == 0 {
            0.0
        } else {
            usage.per_node.iter().sum::<usize>() as f64 / n as f64
        },
    })
}

pub fn heatmap(a: &HeatmapArgs) -> Result<()> {
    let p = ParamMatrix::load_tsv(&a.params)?;
    let meta = NodeMetadata::load(&a.labels, p.num_nodes())?;
    let order = order_for_heatmap(&p, &meta)?;
    p.permuted(&order.rows, &order.cols)
        .save_tsv(out_path(&a.common, "ordered.tsv")?)?;
    for (name, perm) in [("row_order.txt", &order.rows), ("col_order.txt", &order.cols)] {
        let mut w = create(&out_path(&a.common, name)?)?;
        for v in perm.iter() {
            writeln!(w, "{v}")?;
        }
        w.flush()?;
    }
    usage_table(&p, &meta, a.threshold)?.write_csv(create(&out_path(&a.common, "usage.csv")?)?)?;
    render_heatmap(&p, &order)?.save_pgm(out_path(&a.common, "heatmap.pgm")?)?;
    log::info!("wrote heatmap outputs to {}", a.common.out_dir.display());
    Ok(())
}
