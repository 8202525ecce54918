use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] coordesc::Error),
    #[error("support size {k} exceeds dimension {n}")]
    InvalidSupport { k: usize, n: usize },
    #[error("rank {rank} must lie in 1..={max}")]
    InvalidRank { rank: usize, max: usize },
    #[error("sample count {0} must be even and at least 2")]
    InvalidCount(usize),
    #[error("no reference solver for {0}")]
    UnsupportedReference(String),
    #[error(
        "reference solver stalled at gradient-map norm {achieved:e} after {iterations} iterations"
    )]
    ReferenceStalled { achieved: f64, iterations: usize },
    #[error("prox oracle found no finite value on the grid")]
    OracleFailure,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trial {trial}: objective became {value} at epoch {epoch}")]
    NonFinite {
        trial: usize,
        epoch: usize,
        value: f64,
    },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
