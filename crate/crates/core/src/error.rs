use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A sample column is constant, so its variance is zero.
    #[error("node {node} is degenerate (|mean| = 1, zero variance)")]
    DegenerateColumn { node: usize },

    #[error("infeasible noise level: {0}")]
    InfeasibleNoise(String),

    /// The flip-probability quadratic has no root in `[0, 0.5)`.
    #[error("invalid configuration for triple ({i}; {j}, {k}): r = {r}")]
    InvalidConfiguration {
        i: usize,
        j: usize,
        k: usize,
        r: f64,
    },

    #[error("noise construction failed: {0}")]
    ConstructionFailure(String),

    #[error("quad {nodes:?} has a zero correlation")]
    DegenerateQuad { nodes: [usize; 4] },

    /// No row of the star/non-star table is satisfied by the ratios.
    #[error("quad {nodes:?} is ambiguous under the star/non-star table")]
    AmbiguousQuad { nodes: [usize; 4] },

    #[error("learner failure: {0}")]
    LearnerFailure(String),

    #[error("enumeration cap exceeded: class has {size} members, cap is {cap}")]
    CapExceeded { size: u128, cap: usize },

    #[error("exhaustive enumeration limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
