//! Heatmap ordering, channel-usage tables and graymap export for fitted
//! attachment matrices.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::NodeMetadata;
use crate::matrix::{Matrix, ParamMatrix};
use crate::model::channel_usage;

/// Largest raster accepted by [`render_heatmap`], in pixels.
pub const MAX_PIXELS: usize = 1 << 28;

/// Row and column permutations for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatmapOrder {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Label sort key: numeric when every label parses as a number, otherwise
/// lexicographic.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum LabelKey {
    Number(f64),
    Text(String),
}

fn label_keys(labels: &[&str]) -> Vec<LabelKey> {
    let numbers: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    match numbers {
        Some(ns) if ns.iter().all(|v| v.is_finite()) => ns.into_iter().map(LabelKey::Number).collect(),
        _ => labels.iter().map(|l| LabelKey::Text(l.to_string())).collect(),
    }
}

/// Group index per node, groups numbered in ascending label order.
fn groups(meta: &NodeMetadata, num_nodes: usize) -> Result<(Vec<usize>, Vec<String>)> {
    if meta.len() != num_nodes {
        return Err(Error::Dimension(format!(
            "metadata has {} entries, matrix has {num_nodes} rows",
            meta.len()
        )));
    }
    let missing: Vec<usize> = (0..num_nodes).filter(|&i| meta.labels[i].is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    let labels: Vec<&str> = meta.labels.iter().map(|l| l.as_deref().unwrap_or("")).collect();
    let keys = label_keys(&labels);
    let mut distinct: Vec<(LabelKey, &str)> = keys.iter().cloned().zip(labels.iter().copied()).collect();
    distinct.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(b.1)));
    distinct.dedup_by(|a, b| a.1 == b.1);
    let names: Vec<String> = distinct.iter().map(|(_, l)| l.to_string()).collect();
    let index: BTreeMap<&str, usize> = distinct.iter().enumerate().map(|(g, (_, l))| (*l, g)).collect();
    Ok((labels.iter().map(|l| index[l]).collect(), names))
}

/// One-way ANOVA F ratio of a column's values across groups. A column that
/// does not vary between groups scores 0; one that varies between groups
/// but not within them scores `+inf`.
fn variance_ratio(values: impl Iterator<Item = f64>, group_of: &[usize], num_groups: usize) -> f64 {
    let mut sums = vec![0.0; num_groups];
    let mut counts = vec![0usize; num_groups];
    let vals: Vec<f64> = values.collect();
    for (v, &g) in vals.iter().zip(group_of) {
        sums[g] += v;
        counts[g] += 1;
    }
    let n = vals.len();
    let grand = sums.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let between_ss: f64 = means
        .iter()
        .zip(&counts)
        .map(|(m, &c)| c as f64 * (m - grand).powi(2))
        .sum();
    let within_ss: f64 = vals
        .iter()
        .zip(group_of)
        .map(|(v, &g)| (v - means[g]).powi(2))
        .sum();
    if num_groups < 2 || between_ss <= 0.0 {
        return 0.0;
    }
    let between_ms = between_ss / (num_groups - 1) as f64;
    if within_ss <= 0.0 || n <= num_groups {
        return f64::INFINITY;
    }
    between_ms / (within_ss / (n - num_groups) as f64)
}

/// Rows grouped by label (ascending, node id within a group); columns by
/// descending between/within-group variance ratio, ties by column index.
pub fn order_for_heatmap(p: &Matrix, meta: &NodeMetadata) -> Result<HeatmapOrder> {
    let (group_of, names) = groups(meta, p.rows())?;
    let mut rows: Vec<usize> = (0..p.rows()).collect();
    rows.sort_by_key(|&i| (group_of[i], i));

    let ratios: Vec<f64> = (0..p.cols())
        .map(|k| variance_ratio((0..p.rows()).map(|i| p.get(i, k)), &group_of, names.len()))
        .collect();
    let mut cols: Vec<usize> = (0..p.cols()).collect();
    cols.sort_by(|&a, &b| ratios[b].total_cmp(&ratios[a]).then(a.cmp(&b)));
    Ok(HeatmapOrder { rows, cols })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageTable {
    /// `(label, node count, mean channels used)` in ascending label order.
    pub groups: Vec<(String, usize, f64)>,
    /// Mean over all nodes.
    pub all: f64,
}

impl UsageTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "group,nodes,mean_channels")?;
        for (label, count, mean) in &self.groups {
            writeln!(out, "{},{count},{mean}", label.replace(',', ";"))?;
        }
        let total: usize = self.groups.iter().map(|g| g.1).sum();
        writeln!(out, "all,{total},{}", self.all)?;
        out.flush()?;
        Ok(())
    }
}

/// Mean number of channels with `p > threshold`, per label group and overall.
pub fn usage_table(p: &ParamMatrix, meta: &NodeMetadata, threshold: f64) -> Result<UsageTable> {
    let usage = channel_usage(p, threshold)?;
    let (group_of, names) = groups(meta, p.num_nodes())?;
    let mut sums = vec![0usize; names.len()];
    let mut counts = vec![0usize; names.len()];
    for (u, &g) in usage.per_node.iter().zip(&group_of) {
        sums[g] += u;
        counts[g] += 1;
    }
    let n = usage.per_node.len();
    let all = if n == 0 {
        0.0
    } else {
        usage.per_node.iter().sum::<usize>() as f64 / n as f64
    };
    let groups = names
        .into_iter()
        .zip(sums.iter().zip(&counts))
        .map(|(label, (&s, &c))| (label, c, s as f64 / c as f64))
        .collect();
    Ok(UsageTable { groups, all })
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order
            .iter()
            .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// One pixel per matrix cell; values in `[0, 1]` map linearly to black..white
/// (values outside are clamped).
pub fn render_heatmap(p: &Matrix, order: &HeatmapOrder) -> Result<GrayImage> {
    if !is_permutation(&order.rows, p.rows()) || !is_permutation(&order.cols, p.cols()) {
        return Err(Error::InvalidValue("heatmap order is not a permutation".into()));
    }
    let pixels_needed = p.rows().checked_mul(p.cols()).filter(|&n| n <= MAX_PIXELS);
    if pixels_needed.is_none() {
        return Err(Error::Dimension(format!(
            "{}x{} raster exceeds {MAX_PIXELS} pixels",
            p.rows(),
            p.cols()
        )));
    }
    let ordered = p.permuted(&order.rows, &order.cols);
    let pixels = ordered
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    Ok(GrayImage {
        width: p.cols(),
        height: p.rows(),
        pixels,
    })
}

impl GrayImage {
    /// Binary portable graymap (P5, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)?;
        out.flush()?;
        Ok(())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_pgm(BufWriter::new(file))
    }

    pub fn read_pgm<R: Read>(mut input: R) -> Result<GrayImage> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let bad = |m: &str| Error::Parse {
            line: 1,
            message: format!("graymap: {m}"),
        };
        // header: magic, width, height, maxval separated by whitespace
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(bad("expected binary 8-bit P5"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
        let pixels = bytes.get(pos..).unwrap_or_default().to_vec();
        if pixels.len() != width * height {
            return Err(bad("pixel count does not match dimensions"));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        GrayImage::read_pgm(BufReader::new(file))
    }
}
