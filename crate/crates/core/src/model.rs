//! The LCN probability model over a fixed attachment matrix.
//!
//! Two nodes connect through channel `k` with probability `p[i][k] * p[j][k]`,
//! independently across channels, and share an observed edge when at least
//! one channel connects them:
//!
//! ```text
//! pi_ij = 1 - prod_k (1 - p_ik * p_jk)
//! ```
//!
//! The remaining functions are the interpretive statistics derived from this
//! edge probability: per-channel posteriors for an observed edge, channel
//! sizes, expected per-channel connection counts and channel usage.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::ParamMatrix;
use crate::numeric::one_minus_product;

/// `1 - prod_k (1 - a_k b_k)` for two attachment rows.
#[inline]
pub(crate) fn row_edge_probability(a: &[f64], b: &[f64]) -> f64 {
    one_minus_product(a.iter().zip(b).map(|(x, y)| x * y))
}

fn check_pair(p: &ParamMatrix, i: usize, j: usize) -> Result<()> {
    let n = p.num_nodes();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::NodeOutOfRange {
                index: idx,
                num_nodes: n,
            });
        }
    }
    if i == j {
        return Err(Error::SelfPair(i));
    }
    Ok(())
}

fn check_channel(p: &ParamMatrix, k: usize) -> Result<()> {
    if k >= p.num_channels() {
        return Err(Error::InvalidValue(format!(
            "channel {k} out of range for {} channels",
            p.num_channels()
        )));
    }
    Ok(())
}

fn check_graph(p: &ParamMatrix, g: &Graph) -> Result<()> {
    if p.num_nodes() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows, graph has {} nodes",
            p.num_nodes(),
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Probability that nodes `i` and `j` share an observed edge.
pub fn edge_probability(p: &ParamMatrix, i: usize, j: usize) -> Result<f64> {
    check_pair(p, i, j)?;
    Ok(row_edge_probability(p.row(i), p.row(j)))
}

/// Observed-data log-likelihood over all pairs whose status is known.
///
/// Returns `-inf` when a known edge has probability zero or a known non-edge
/// has probability one.
pub fn log_likelihood(p: &ParamMatrix, g: &Graph) -> Result<f64> {
    check_graph(p, g)?;
    let n = g.num_nodes();
    let mut total = 0.0;
    for i in 0..n {
        let edges = g.neighbors(i);
        let masked = g.masked(i);
        let (mut e, mut m) = (0, 0);
        let row_i = p.row(i);
        for j in (i + 1)..n {
            while e < edges.len() && edges[e] < j {
                e += 1;
            }
            while m < masked.len() && masked[m] < j {
                m += 1;
            }
            if m < masked.len() && masked[m] == j {
                continue;
            }
            let pi = row_edge_probability(row_i, p.row(j));
            total += if e < edges.len() && edges[e] == j {
                pi.ln()
            } else {
                (-pi).ln_1p()
            };
        }
    }
    Ok(total)
}

/// Posterior probability that channel `k` carries an observed edge `(i, j)`.
pub fn channel_posterior(p: &ParamMatrix, i: usize, j: usize, k: usize) -> Result<f64> {
    check_pair(p, i, j)?;
    check_channel(p, k)?;
    let pi = row_edge_probability(p.row(i), p.row(j));
    if pi <= 0.0 {
        return Err(Error::ZeroProbabilityEdge { i, j });
    }
    Ok(p.get(i, k) * p.get(j, k) / pi)
}

/// Channel size: the column sum of `p`.
pub fn channel_size(p: &ParamMatrix, k: usize) -> Result<f64> {
    check_channel(p, k)?;
    Ok((0..p.num_nodes()).map(|i| p.get(i, k)).sum())
}

/// Sizes of every channel.
pub fn channel_sizes(p: &ParamMatrix) -> Vec<f64> {
    p.column_sums()
}

/// Expected number of node `i`'s observed edges that run through channel `k`.
pub fn expected_connections(p: &ParamMatrix, g: &Graph, i: usize, k: usize) -> Result<f64> {
    check_graph(p, g)?;
    check_channel(p, k)?;
    if i >= g.num_nodes() {
        return Err(Error::NodeOutOfRange {
            index: i,
            num_nodes: g.num_nodes(),
        });
    }
    g.neighbors(i)
        .iter()
        .map(|&j| channel_posterior(p, i, j, k))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelUsage {
    /// Channels with `p[i][k] > threshold`, per node.
    pub per_node: Vec<usize>,
    /// Fraction of entries of `p` that are exactly zero.
    pub sparsity: f64,
}

pub fn channel_usage(p: &ParamMatrix, threshold: f64) -> Result<ChannelUsage> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidValue(format!("threshold {threshold} not in [0, 1]")));
    }
    let per_node = (0..p.num_nodes())
        .map(|i| p.row(i).iter().filter(|&&v| v > threshold).count())
        .collect();
    let total = p.as_slice().len();
    let zeros = p.as_slice().iter().filter(|&&v| v == 0.0).count();
    let sparsity = if total == 0 {
        0.0
    } else {
        zeros as f64 / total as f64
    };
    Ok(ChannelUsage { per_node, sparsity })
}
