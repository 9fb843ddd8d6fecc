use thiserror::Error;

/// Errors raised by risk evaluation, divergence and bound computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("enumeration of {size} items exceeds the cap of {cap}")]
    EnumerationTooLarge { size: u128, cap: u64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("not normalized (expected sum 1): sum={sum}")]
    NotNormalized { sum: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter {0:?} is not tabulated by this family or loss matrix")]
    UnknownParameter(Vec<f64>),

    #[error("action set is empty")]
    EmptyActionSet,

    #[error("index set has {0} member(s); at least 2 are required")]
    DegenerateIndexSet(usize),

    #[error("members {0} and {1} violate the packing condition by {2}")]
    PackingViolation(usize, usize, f64),

    #[error("hypercube member {vertex} violates the separation at grid point {point}")]
    SeparationViolation { vertex: usize, point: usize },

    #[error("metric {0} has no packing verifier")]
    UnsupportedMetric(&'static str),

    #[error("learner output {0} is incompatible with the loss")]
    IncompatibleAction(String),

    /// A property that holds by construction failed numerically.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
