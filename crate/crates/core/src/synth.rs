//! Synthetic graph generators: the planted stochastic block model and the
//! generative LCN with main and background channels.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Beta, Binomial, Distribution};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{Matrix, ParamMatrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmSpec {
    pub num_blocks: usize,
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn new(num_blocks: usize, block_size: usize, p_in: f64, p_out: f64) -> Self {
        SbmSpec {
            num_blocks,
            block_size,
            p_in,
            p_out,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SbmSpec { seed, ..self }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_blocks * self.block_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 || self.block_size == 0 {
            return Err(Error::Config("block count and block size must be at least 1".into()));
        }
        for (name, v) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is not a probability")));
            }
        }
        Ok(())
    }
}

/// True edge probabilities of a planted block model. Node `i` sits in block
/// `i / block_size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmTruth {
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
}

impl SbmTruth {
    pub fn block(&self, i: usize) -> usize {
        i / self.block_size
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        if self.block(i) == self.block(j) {
            self.p_in
        } else {
            self.p_out
        }
    }
}

pub fn generate_sbm(spec: &SbmSpec) -> Result<(Graph, SbmTruth)> {
    spec.validate()?;
    let truth = SbmTruth {
        block_size: spec.block_size,
        p_in: spec.p_in,
        p_out: spec.p_out,
    };
    let n = spec.num_nodes();
    let mut rng = seed::rng(spec.seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < truth.probability(i, j) {
                pairs.push((i, j));
            }
        }
    }
    Ok((Graph::from_edges(n, pairs)?, truth))
}

/// AUC of the Bayes-optimal predictor (block co-membership) for a planted
/// block model, with ties given half credit.
pub fn sbm_bayes_auc(spec: &SbmSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.num_nodes();
    if n < 2 {
        return Err(Error::Config("need at least two nodes".into()));
    }
    let pi_b = (spec.block_size - 1) as f64 / (n - 1) as f64;
    let q_b = 1.0 - pi_b;
    let (p_in, p_out) = (spec.p_in, spec.p_out);
    let (q_in, q_out) = (1.0 - p_in, 1.0 - p_out);

    let better = p_in * q_out * pi_b * q_b;
    let tie_in = p_in * q_in * pi_b * pi_b;
    let tie_out = p_out * q_out * q_b * q_b;
    let worse = p_out * q_in * q_b * pi_b;
    let denom = better + tie_in + tie_out + worse;
    if p_in == p_out || denom <= 0.0 {
        return Ok(0.5);
    }
    Ok((better + 0.5 * (tie_in + tie_out)) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    /// Background channels are exactly zero.
    Sparse,
    /// Background channels are Beta distributed.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeProfile {
    /// `1 + BetaBinomial(a, b, n)` main channels per node.
    Skewed,
    /// A fixed number of main channels per node.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcnGenSpec {
    pub num_nodes: usize,
    pub num_channels: usize,
    pub sparsity: Sparsity,
    pub degree_profile: DegreeProfile,
    /// Main-channel strengths are Uniform(lo, hi).
    pub main_strength: (f64, f64),
    /// Beta(a, b) parameters of dense background strengths.
    pub background: (f64, f64),
    /// Beta-binomial `(a, b, n)` for the skewed main-channel count.
    pub skew: (f64, f64, u64),
    /// Main channels per node under the uniform profile.
    pub uniform_main: usize,
    /// Forces every node's main-channel count; a test hook.
    pub main_count_override: Option<usize>,
    pub seed: u64,
}

impl LcnGenSpec {
    pub fn new(
        num_nodes: usize,
        num_channels: usize,
        sparsity: Sparsity,
        degree_profile: DegreeProfile,
    ) -> Self {
        LcnGenSpec {
            num_nodes,
            num_channels,
            sparsity,
            degree_profile,
            main_strength: (0.0, 1.0),
            background: (1.0, 20.0),
            skew: (1.0, 10.0, 15),
            uniform_main: 3,
            main_count_override: None,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        LcnGenSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 || self.num_channels == 0 {
            return Err(Error::Config("node and channel counts must be at least 1".into()));
        }
        let (lo, hi) = self.main_strength;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!("main strength range ({lo}, {hi}) not within [0, 1]")));
        }
        let fixed = match (self.main_count_override, self.degree_profile) {
            (Some(c), _) => Some(c),
            (None, DegreeProfile::Uniform) => Some(self.uniform_main),
            (None, DegreeProfile::Skewed) => None,
        };
        if let Some(c) = fixed {
            if c > self.num_channels {
                return Err(Error::Config(format!(
                    "{c} main channels requested but only {} channels exist",
                    self.num_channels
                )));
            }
        }
        Ok(())
    }
}

/// Draw a true attachment matrix and a graph from it.
pub fn generate_lcn(spec: &LcnGenSpec) -> Result<(Graph, ParamMatrix)> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let (n, kk) = (spec.num_nodes, spec.num_channels);
    let background = match spec.sparsity {
        Sparsity::Sparse => None,
        Sparsity::Dense => Some(
            Beta::new(spec.background.0, spec.background.1)
                .map_err(|e| Error::Config(format!("background distribution: {e}")))?,
        ),
    };
    let skew = Beta::new(spec.skew.0, spec.skew.1)
        .map_err(|e| Error::Config(format!("main-channel count distribution: {e}")))?;

    let mut p = Matrix::zeros(n, kk);
    let mut capped = 0usize;
    for i in 0..n {
        let count = match (spec.main_count_override, spec.degree_profile) {
            (Some(c), _) => c,
            (None, DegreeProfile::Uniform) => spec.uniform_main,
            (None, DegreeProfile::Skewed) => {
                let q: f64 = skew.sample(&mut rng);
                let extra = Binomial::new(spec.skew.2, q)
                    .map_err(|e| Error::Config(format!("binomial: {e}")))?
                    .sample(&mut rng) as usize;
                let c = 1 + extra;
                if c > kk {
                    capped += 1;
                }
                c.min(kk)
            }
        };
        if let Some(bg) = &background {
            for k in 0..kk {
                p.set(i, k, bg.sample(&mut rng));
            }
        }
        let (lo, hi) = spec.main_strength;
        for k in index::sample(&mut rng, kk, count) {
            p.set(i, k, lo + (hi - lo) * rng.random::<f64>());
        }
    }
    if capped > 0 {
        log::info!("main-channel count capped at {kk} for {capped} nodes");
    }
    let p = ParamMatrix::from_matrix_unchecked(p);
    let g = sample_lcn_graph(&p, &mut rng)?;
    Ok((g, p))
}

/// Sample a graph from attachment probabilities: each channel independently
/// connects `(i, j)` with probability `p_ik p_jk`, and a pair is an edge when
/// any channel connects it.
pub fn sample_lcn_graph(p: &ParamMatrix, rng: &mut seed::Rng) -> Result<Graph> {
    let n = p.num_nodes();
    let mut pairs = Vec::new();
    for k in 0..p.num_channels() {
        let members: Vec<usize> = (0..n).filter(|&i| p.get(i, k) > 0.0).collect();
        for (a, &i) in members.iter().enumerate() {
            let pik = p.get(i, k);
            for &j in &members[a + 1..] {
                if rng.random::<f64>() < pik * p.get(j, k) {
                    pairs.push((i, j));
                }
            }
        }
    }
    Graph::from_edges(n, pairs)
}
