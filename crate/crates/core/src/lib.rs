//! Chronological masked-language-model workbench.
//!
//! The crate builds a series of small masked-language-model checkpoints over
//! year-sliced scientific text and mines it: fill-mask probability tracking,
//! weight-space PCA, performance matrices, checkpoint interpolation, and a
//! citation link-prediction suite (topological predictors and a GCN encoder).
//!
//! Module map:
//!
//! - [`corpus`]: markup normalization, sentence segmentation, cleaning filters
//!   and per-year slices.
//! - [`vocab`]: whole-word vocabulary, encoding and vocabulary similarity.
//! - [`mlm`]: transformer encoder with an MLM head, masking, analytic
//!   gradients, training and the checkpoint file format.
//! - [`series`]: base pretraining, yearly continual steps, interpolation and
//!   the matched-moments random baseline.
//! - [`probe`]: performance matrices, token tracking, PCA and Mann-Whitney U.
//! - [`citegraph`]: citation graph, link predictors, GNN and protocols.
//! - [`cli`]: the `chronolm` command-line entry point.

pub mod citegraph;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod mlm;
pub mod plot;
pub mod probe;
pub mod rng;
pub mod series;
pub mod synth;
pub mod vocab;

pub use error::{Error, Result};
