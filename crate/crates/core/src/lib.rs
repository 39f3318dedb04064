//! Joint learning of compositional and non-compositional embeddings for
//! transitive verb-object phrases.
//!
//! Each candidate phrase `VO` gets a compositional embedding `c = M(V) v(O)`,
//! an independently parameterized embedding `n`, and a compositionality score
//! `alpha = sigmoid(W . phi(VO))` that blends the two. All parameters are
//! trained on a predicate-argument plausibility task with negative sampling
//! and mini-batch AdaGrad.
//!
//! The crate is split along the pipeline:
//!
//! - [`corpus`]: tuple ingestion, lexicon, splits, candidate phrases and
//!   the sparse compositionality features.
//! - [`model`]: parameters, forward computations and the model file format.
//! - [`trainer`]: cost, analytic gradients, AdaGrad, early stopping, grid search.
//! - [`eval`]: Spearman correlation, rating-dataset evaluations, ensembles,
//!   bootstrap intervals, nearest neighbours and per-verb analyses.
//! - [`synthetic`]: generated corpora with known compositional structure.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
