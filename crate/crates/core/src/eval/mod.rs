//! Evaluation against human judgments and embedding inspection.

mod bootstrap;
mod ensemble;
mod neighbors;
mod report;
pub mod spearman;
mod tasks;

pub use crate::corpus::ratings::{
    DisambigDataset, DisambigGroup, Judgment, RatingDataset, RatingItem,
};
pub use bootstrap::{bootstrap_ci, percentile, ConfidenceInterval, MIN_REPLICATES};
pub use ensemble::{ensemble_scores, read_dump, write_dump, Ensemble, ScoreTable};
pub use neighbors::{candidate_pool, nearest_neighbors, Neighbor, Query};
pub use report::{fmt_score, ReportLine, REPORT_COLUMNS};
pub use spearman::{average_ranks, pearson, spearman};
pub use tasks::{
    compositionality_against, correlate, disambiguation_against, eval_compositionality,
    eval_disambiguation, extremes, group_similarity, per_verb_average_alpha, Evaluation, Ranked,
    RatingMode, ScoredItem,
};
