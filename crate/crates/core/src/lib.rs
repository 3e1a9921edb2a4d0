//! Semantic F1: multi-label evaluation metrics that grant partial credit
//! through a label similarity matrix.
//!
//! The crate covers the metric family itself ([`metrics`]), similarity
//! matrix construction ([`similarity`]), the vector-valued extension
//! ([`continuous`]), hard and matching-based baselines ([`baselines`]),
//! synthetic label-space generators ([`synthgen`]), statistics
//! ([`stats`]), the study runner ([`study`]) and file formats ([`io`]).

pub mod baselines;
pub mod continuous;
pub mod error;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod similarity;
pub mod stats;
pub mod study;
pub mod synthgen;

pub use error::{Error, Result};
pub use labels::{EvaluationBatch, LabelSet, LabelUniverse};
pub use metrics::{
    best_match, evaluate, macro_sef1, micro_sef1, pointwise_sef1, sample_sef1, MatchAssignment, MetricReport, Prf,
    Weighting,
};
pub use similarity::SimilarityMatrix;
