//! Crate-wide error type.

use alloc::string::String;
use thiserror::Error;

/// Errors produced by the forecasting pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input value outside its domain (non-finite coordinate, negative count, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Configuration that cannot be acted on (empty universe, bad bounds, ...).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Structural mismatch between data and what an operation expects.
    #[error("schema mismatch: {0}")]
    Schema(String),
    /// A window (or window sequence) with no usable values.
    #[error("empty window: {0}")]
    EmptyWindow(String),
    /// Too few samples for the requested statistic or plan.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Entropy requested for weights that do not define a distribution.
    #[error("undefined entropy: {0}")]
    UndefinedEntropy(String),
    /// Pearson correlation requested for a constant input.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    /// AUC requested with a single-class truth vector.
    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),
    /// Feature-name part outside the closed vocabulary.
    #[error("unknown feature name part: {0}")]
    Naming(String),
    /// Model training cannot proceed (single-class labels, ...).
    #[error("training failed: {0}")]
    Training(String),
    /// No out-of-bag coverage for any sample.
    #[error("no out-of-bag coverage: {0}")]
    Coverage(String),
}

pub type Result<T> = core::result::Result<T, Error>;
