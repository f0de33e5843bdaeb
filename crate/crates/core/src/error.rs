use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("malformed matrix: {0}")]
    Malformed(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian: relative anti-Hermitian part {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is not one: {trace}")]
    TraceNotOne { trace: f64 },

    #[error("operator is not unitary: ||S S^dag - I||_F = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("S^M is not proportional to the identity: ||S^M - cI||_F = {deviation:e}")]
    NotProjectiveOrder { deviation: f64 },

    #[error("invalid order M = {0}")]
    InvalidOrder(usize),

    #[error("symmetry order {symmetry} does not match ensemble size {ensemble}")]
    OrderMismatch { symmetry: usize, ensemble: usize },

    #[error("eigendecomposition failed: {0}")]
    DecompositionFailed(String),

    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("a block specification is required for this problem kind")]
    MissingBlockSpec,

    #[error("barrier method hit the iteration limit: best value {best_value}, duality gap {gap:e}")]
    MaxIterationsExceeded { best_value: f64, gap: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("slack operator has an empty null space (smallest relative singular value {min_relative:e})")]
    EmptyNullSpace { min_relative: f64 },

    #[error("completeness system infeasible: residual {residual:e}")]
    CompletenessInfeasible { residual: f64 },

    #[error("measurement operators do not sum to the identity: residual {residual:e}")]
    CompletenessViolated { residual: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::NonFinite { .. } => "NonFinite",
            Error::Malformed(_) => "Malformed",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPsd { .. } => "NotPSD",
            Error::TraceNotOne { .. } => "TraceNotOne",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::NotProjectiveOrder { .. } => "NotProjectiveOrder",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::OrderMismatch { .. } => "OrderMismatch",
            Error::DecompositionFailed(_) => "DecompositionFailed",
            Error::InfeasibleParameters(_) => "InfeasibleParameters",
            Error::DimensionCapExceeded { .. } => "DimensionCapExceeded",
            Error::InvalidInput(_) => "InvalidInput",
            Error::MissingBlockSpec => "MissingBlockSpec",
            Error::MaxIterationsExceeded { .. } => "MaxIterationsExceeded",
            Error::NumericalBreakdown(_) => "NumericalBreakdown",
            Error::EmptyNullSpace { .. } => "EmptyNullSpace",
            Error::CompletenessInfeasible { .. } => "CompletenessInfeasible",
            Error::CompletenessViolated { .. } => "CompletenessViolated",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// Errors produced by the numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::MaxIterationsExceeded { .. }
                | Error::NumericalBreakdown(_)
                | Error::DecompositionFailed(_)
                | Error::EmptyNullSpace { .. }
                | Error::CompletenessInfeasible { .. }
                | Error::CompletenessViolated { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
