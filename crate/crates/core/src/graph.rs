//! Undirected graph storage with per-node known-edge and unknown-status lists.
//!
//! Every node keeps two sorted neighbor lists: `edges` (pairs known to share
//! an edge) and `masked` (pairs whose edge status is withheld). Any pair that
//! is in neither list is a known non-edge. The fitters only ever iterate the
//! two explicit lists; non-edge contributions are recovered from column sums.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<Vec<usize>>,
    masked: Vec<Vec<usize>>,
}

impl Graph {
    /// A graph with `num_nodes` isolated nodes.
    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            num_nodes,
            edges: vec![Vec::new(); num_nodes],
            masked: vec![Vec::new(); num_nodes],
        }
    }

    /// Build from undirected pairs. Duplicates and both orientations are merged.
    pub fn from_edges<I>(num_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(num_nodes);
        for (i, j) in pairs {
            g.check_node(i)?;
            g.check_node(j)?;
            if i == j {
                return Err(Error::SelfPair(i));
            }
            g.edges[i].push(j);
            g.edges[j].push(i);
        }
        g.normalize();
        Ok(g)
    }

    /// Parse an edge list: one `i j` pair of 0-based ids per line, `#` comments
    /// and blank lines ignored. `node_count` overrides `1 + max id`.
    pub fn parse_edge_list<R: BufRead>(reader: R, node_count: Option<usize>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut max_id = None::<usize>;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let ids = parse_ids(trimmed, 2, lineno)?;
            let (i, j) = (ids[0], ids[1]);
            if i == j {
                return Err(Error::SelfLoop { node: i, line: lineno });
            }
            max_id = Some(max_id.map_or(i.max(j), |m| m.max(i).max(j)));
            pairs.push((i, j));
        }
        let Some(max_id) = max_id else {
            return Err(Error::EmptyInput);
        };
        let n = match node_count {
            Some(n) if n <= max_id => {
                return Err(Error::NodeOutOfRange {
                    index: max_id,
                    num_nodes: n,
                })
            }
            Some(n) => n,
            None => max_id + 1,
        };
        Graph::from_edges(n, pairs)
    }

    pub fn load_edge_list(path: impl AsRef<Path>, node_count: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Graph::parse_edge_list(BufReader::new(file), node_count)
    }

    /// Writes each known edge once as `i j` with `i < j`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, j) in self.edge_pairs() {
            writeln!(out, "{i} {j}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_edge_list(BufWriter::new(file))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of known undirected edges.
    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Number of undirected pairs with unknown status.
    pub fn num_masked(&self) -> usize {
        self.masked.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Number of known non-edges.
    pub fn num_nonedges(&self) -> usize {
        let n = self.num_nodes;
        n * n.saturating_sub(1) / 2 - self.num_edges() - self.num_masked()
    }

    /// Known neighbors of `i` (sorted).
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    /// Nodes whose edge status with `i` is unknown (sorted).
    #[inline]
    pub fn masked(&self, i: usize) -> &[usize] {
        &self.masked[i]
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.edges[i].len())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.num_nodes && self.edges[i].binary_search(&j).is_ok()
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        i < self.num_nodes && self.masked[i].binary_search(&j).is_ok()
    }

    /// Number of pairs `(i, j)`, `j != i`, whose status is known.
    #[inline]
    pub fn known_pair_count(&self, i: usize) -> usize {
        self.num_nodes - 1 - self.masked[i].len()
    }

    /// Known edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edge_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Masked pairs as `(i, j)` with `i < j`, in lexicographic order.
    pub fn masked_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.masked
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Full-scan check of the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidValue(msg));
        if self.edges.len() != self.num_nodes || self.masked.len() != self.num_nodes {
            return bad("adjacency length differs from node count".into());
        }
        for i in 0..self.num_nodes {
            for (name, list) in [("edge", &self.edges[i]), ("masked", &self.masked[i])] {
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    return bad(format!("{name} list of node {i} is not strictly sorted"));
                }
                for &j in list {
                    if j >= self.num_nodes {
                        return bad(format!("{name} list of node {i} holds {j}"));
                    }
                    if j == i {
                        return bad(format!("self-loop on node {i}"));
                    }
                }
            }
            for &j in &self.edges[i] {
                if !self.has_edge(j, i) {
                    return bad(format!("edge ({i}, {j}) is not symmetric"));
                }
                if self.is_masked(i, j) {
                    return bad(format!("pair ({i}, {j}) is both known and masked"));
                }
            }
            for &j in &self.masked[i] {
                if !self.is_masked(j, i) {
                    return bad(format!("masked pair ({i}, {j}) is not symmetric"));
                }
            }
        }
        Ok(())
    }

    /// Withhold the status of the given pairs. Known edges among them are
    /// removed from the edge lists.
    pub fn with_masked<I>(&self, pairs: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = self.clone();
        let mut seen = HashSet::new();
        for (i, j) in pairs {
            g.check_node(i)?;
            g.check_node(j)?;
            if i == j {
                return Err(Error::SelfPair(i));
            }
            if g.is_masked(i, j) || !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::AlreadyMasked { i, j });
            }
            g.masked[i].push(j);
            g.masked[j].push(i);
        }
        for i in 0..g.num_nodes {
            g.masked[i].sort_unstable();
            let masked = &g.masked[i];
            g.edges[i].retain(|j| masked.binary_search(j).is_err());
        }
        Ok(g)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.num_nodes {
            return Err(Error::NodeOutOfRange {
                index: i,
                num_nodes: self.num_nodes,
            });
        }
        Ok(())
    }

    fn normalize(&mut self) {
        for list in self.edges.iter_mut().chain(self.masked.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
    }
}

fn parse_ids(line: &str, expected: usize, lineno: usize) -> Result<Vec<usize>> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {expected} fields, found {}", tokens.len()),
        });
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("`{t}` is not a non-negative integer"),
            })
        })
        .collect()
}

/// A held-out node pair with its true status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskedPair {
    pub i: usize,
    pub j: usize,
    pub edge: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskSet {
    pub pairs: Vec<MaskedPair>,
}

impl MaskSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.pairs.iter().filter(|p| p.edge).count()
    }

    pub fn num_nonedges(&self) -> usize {
        self.pairs.iter().filter(|p| !p.edge).count()
    }

    pub fn node_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|p| (p.i, p.j))
    }

    pub fn labels(&self) -> Vec<bool> {
        self.pairs.iter().map(|p| p.edge).collect()
    }

    /// Parse `i j status` lines, status `0` or `1`.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let ids = parse_ids(trimmed, 3, idx + 1)?;
            if ids[2] > 1 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("status must be 0 or 1, found {}", ids[2]),
                });
            }
            pairs.push(MaskedPair {
                i: ids[0],
                j: ids[1],
                edge: ids[2] == 1,
            });
        }
        Ok(MaskSet { pairs })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        MaskSet::parse(BufReader::new(file))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.pairs {
            writeln!(out, "{} {} {}", p.i, p.j, u8::from(p.edge))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file))
    }
}

/// Mask a mask file's pairs on a fully observed graph, recording true status
/// from the graph itself (the file's status column is ignored here).
pub fn mask_from_set(g: &Graph, mask: &MaskSet) -> Result<(Graph, MaskSet)> {
    let masked = g.with_masked(mask.node_pairs())?;
    let recorded = MaskSet {
        pairs: mask
            .pairs
            .iter()
            .map(|p| MaskedPair {
                i: p.i,
                j: p.j,
                edge: g.has_edge(p.i, p.j),
            })
            .collect(),
    };
    Ok((masked, recorded))
}

type PairList = Vec<(usize, usize)>;

/// Withhold `n_edges` known edges and `n_nonedges` known non-edges, each drawn
/// uniformly without replacement within its class.
pub fn apply_mask(
    g: &Graph,
    rng_seed: u64,
    n_edges: usize,
    n_nonedges: usize,
) -> Result<(Graph, MaskSet)> {
    let mut rng = seed::rng(rng_seed);
    let (edge_pairs, nonedge_pairs) = sample_known_pairs(g, &mut rng, n_edges, n_nonedges, &[])?;
    let mut pairs = Vec::with_capacity(n_edges + n_nonedges);
    pairs.extend(edge_pairs.into_iter().map(|(i, j)| MaskedPair { i, j, edge: true }));
    pairs.extend(
        nonedge_pairs
            .into_iter()
            .map(|(i, j)| MaskedPair { i, j, edge: false }),
    );
    let mask = MaskSet { pairs };
    let masked = g.with_masked(mask.node_pairs())?;
    Ok((masked, mask))
}

/// Draw distinct known edges and known non-edges of `g`, avoiding masked
/// pairs and any pair in `exclude`. Non-edges are found by rejection from
/// uniform random pairs. Pairs are returned with `i < j`.
pub(crate) fn sample_known_pairs(
    g: &Graph,
    rng: &mut seed::Rng,
    n_edges: usize,
    n_nonedges: usize,
    exclude: &[(usize, usize)],
) -> Result<(PairList, PairList)> {
    let excluded: HashSet<(usize, usize)> =
        exclude.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    let edges: Vec<(usize, usize)> = g
        .edge_pairs()
        .filter(|p| !excluded.contains(p))
        .collect();
    if edges.len() < n_edges {
        return Err(Error::InsufficientPairs {
            class: "edges",
            requested: n_edges,
            available: edges.len(),
        });
    }
    let excluded_nonedges = excluded
        .iter()
        .filter(|&&(i, j)| i != j && !g.has_edge(i, j) && !g.is_masked(i, j))
        .count();
    let available = g.num_nonedges() - excluded_nonedges;
    if available < n_nonedges {
        return Err(Error::InsufficientPairs {
            class: "non-edges",
            requested: n_nonedges,
            available,
        });
    }

    let picked: Vec<(usize, usize)> = index::sample(rng, edges.len(), n_edges)
        .into_iter()
        .map(|idx| edges[idx])
        .collect();

    let n = g.num_nodes();
    let mut chosen = HashSet::with_capacity(n_nonedges);
    let mut nonedges = Vec::with_capacity(n_nonedges);
    while nonedges.len() < n_nonedges {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if g.has_edge(a, b) || g.is_masked(a, b) || excluded.contains(&pair) {
            continue;
        }
        if chosen.insert(pair) {
            nonedges.push(pair);
        }
    }
    Ok((picked, nonedges))
}

/// Optional per-node categorical label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMetadata {
    pub labels: Vec<Option<String>>,
}

impl NodeMetadata {
    pub fn new(labels: Vec<Option<String>>) -> Self {
        NodeMetadata { labels }
    }

    pub fn from_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        NodeMetadata {
            labels: labels.into_iter().map(|s| Some(s.into())).collect(),
        }
    }

    /// Parse `i label` lines for a graph with `num_nodes` nodes. Labels may
    /// contain spaces; nodes without a line are left unlabeled.
    pub fn parse<R: BufRead>(reader: R, num_nodes: usize) -> Result<Self> {
        let mut labels = vec![None; num_nodes];
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (id, label) = trimmed
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "expected `node label`".into(),
                })?;
            let id: usize = id.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("`{id}` is not a node id"),
            })?;
            if id >= num_nodes {
                return Err(Error::NodeOutOfRange {
                    index: id,
                    num_nodes,
                });
            }
            labels[id] = Some(label.trim().to_string());
        }
        Ok(NodeMetadata { labels })
    }

    pub fn load(path: impl AsRef<Path>, num_nodes: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        NodeMetadata::parse(BufReader::new(file), num_nodes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
