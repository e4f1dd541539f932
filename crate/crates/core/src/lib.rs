//! Latent Channel Network (LCN) graph models.
//!
//! An observed edge between two nodes exists when the pair connects through at
//! least one latent channel; node `i` attaches to channel `k` with probability
//! `p[i][k]`. This crate fits the attachment matrix by EM (a direct reference
//! implementation and a cached, row-parallel one), fits the BKN Poisson
//! factorization used as a baseline, and provides the synthetic generators,
//! AUC evaluation harness and reporting helpers used to compare the two.

pub mod bkn;
pub mod em;
mod error;
pub mod eval;
pub mod graph;
pub mod matrix;
pub mod model;
mod numeric;
pub mod report;
pub mod seed;
pub mod synth;

pub use bkn::BknParams;
pub use em::{FitConfig, FitReport};
pub use error::{Error, Result};
pub use graph::{Graph, MaskSet, MaskedPair, NodeMetadata};
pub use matrix::{Matrix, ParamMatrix};
