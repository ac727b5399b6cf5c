use thiserror::Error;

/// Crate-wide error type. Validation failures carry enough context to be
/// printed verbatim by the CLI (exit code 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("Ω must be strictly interior")]
    OmegaNotInterior,
    #[error("s out of range: s must lie in (0,1), got {0}")]
    SOutOfRange(f64),
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),
    #[error("far field inconsistent with outermost cell ring at cell {cell}")]
    FarFieldInconsistent { cell: usize },
    #[error("interaction requires disjoint sets (cell {cell} in both)")]
    SetsNotDisjoint { cell: usize },
    #[error("cell {cell} not in Ω")]
    CellNotInOmega { cell: usize },
    #[error("non-finite curvature value H[{cell}] = {value}")]
    NonFiniteH { cell: usize, value: f64 },
    #[error("p.v. curvature defined on ∂E; cell {cell} is not a boundary cell")]
    NotBoundaryCell { cell: usize },
    #[error("ball of radius {r} exceeds the admissible region (max {max})")]
    BallTooLarge { r: f64, max: f64 },
    #[error("brute force bound exceeded: |Ω| = {omega} > {bound}")]
    BruteForceTooLarge { omega: usize, bound: usize },
    #[error("full competitor enumeration bound exceeded: |Ω| = {omega} > {bound}")]
    EnumerationTooLarge { omega: usize, bound: usize },
    #[error("undefined Hausdorff distance: a boundary is empty in the window")]
    EmptyBoundary,
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("counterexample preconditions not met: {0}")]
    CounterexamplePrecondition(String),
    #[error("non-subgraph minimizer in measurement window at column {column}")]
    NotSubgraph { column: usize },
    #[error("invalid principal-value configuration: {0}")]
    InvalidPvConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
