use thiserror::Error;

/// Errors raised by the coordinate descent toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid partition: cannot split {n} variables into {s} nonempty blocks")]
    InvalidPartition { n: usize, s: usize },
    #[error("flop ratio undefined: full-update count is zero")]
    UndefinedRatio,
    #[error("invalid bounds: lower {lo} exceeds upper {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("proximal operator not supported for {0}")]
    UnsupportedProx(&'static str),
    #[error("ineligible summative composition: {0}")]
    IneligibleComposition(String),
    #[error("empty index domain")]
    EmptyDomain,
    #[error("invalid Lipschitz constant at index {index}: {value}")]
    InvalidLipschitz { index: usize, value: f64 },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("essentially cyclic window N={window} is shorter than the block count s={blocks}")]
    WindowTooShort { window: usize, blocks: usize },
    #[error("update scheme not supported: {0}")]
    UnsupportedScheme(String),
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error("invalid extrapolation weight {0}")]
    InvalidWeight(f64),
    #[error("empty mini-batch")]
    EmptyBatch,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("variance-reduction anchor has not been set")]
    NoAnchor,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("cache error: {0}")]
    Cache(String),
    #[error("column {0} has zero norm")]
    DegenerateColumn(usize),
    #[error("diagonal entry {index} is degenerate ({value})")]
    DegenerateDiagonal { index: usize, value: f64 },
    #[error("invalid continuation: {0}")]
    InvalidContinuation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: impl ToString, got: impl ToString) -> Error {
    Error::Shape {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
