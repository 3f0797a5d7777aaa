use thiserror::Error;

/// Errors shared across the decomposition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has {actual} < {required} edge connectivity")]
    InsufficientConnectivity { required: usize, actual: usize },

    #[error("no packing of {requested} edge-disjoint spanning trees exists (best: {achieved})")]
    PackingFailed { requested: usize, achieved: usize },

    #[error("degree-bounded spanning tree search exhausted its budget ({budget} exchanges)")]
    BoundedTreeSearchExhausted { budget: usize },

    #[error("not enough trees in pack: need {needed}, have {available}")]
    InsufficientTrees { needed: usize, available: usize },

    #[error("tree budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("completion starved: vertex {vertex} has only {available} of {needed} reserved edges")]
    ExtensionStarved {
        vertex: usize,
        needed: usize,
        available: usize,
    },

    #[error("edge count {edges} not divisible by {divisor}")]
    DivisibilityViolation { edges: usize, divisor: usize },

    #[error("balanced path parity repair failed: {0}")]
    ParityRepairFailed(String),

    #[error("unknown gallery entry: {0}")]
    UnknownGallery(String),

    #[error("random graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::InternalInvariantViolation(msg.into())
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code used by the CLI: 2 for violated preconditions,
    /// 3 for a stage that gave up, 4 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::InsufficientConnectivity { .. }
            | Error::DivisibilityViolation { .. }
            | Error::UnknownGallery(_)
            | Error::InvalidArgument(_) => 2,
            Error::InternalInvariantViolation(_) => 4,
            Error::Stage { source, .. } => source.exit_code().max(3),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
