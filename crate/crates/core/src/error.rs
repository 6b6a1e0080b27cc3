use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is not weakly connected")]
    NotWeaklyConnected,
    #[error("invalid edge indices ({i}, {j}) for {size} vertices")]
    InvalidIndices { i: usize, j: usize, size: usize },
    #[error("size mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("bracket of A_{i}{j} and A_{j}{i} is outside the three-case formula")]
    DegenerateBracket { i: usize, j: usize },
    #[error("generator set is empty")]
    EmptyGeneratorSet,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("agent subset is empty")]
    EmptySubset,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("requires N > n (got N = {agents}, n = {dim})")]
    RequiresNGreaterThann { agents: usize, dim: usize },
    #[error("configuration has rank {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("configuration is degenerate (rank {rank} < {dim})")]
    Degenerate { rank: usize, dim: usize },
    #[error("simplex is degenerate")]
    SimplexDegenerate,
    #[error("input is empty")]
    EmptyInput,
    #[error("ambient dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid stratum: {0}")]
    InvalidStratum(String),
    #[error("configuration is not in Q")]
    NotInQ,
    #[error(
        "graph does not satisfy the component-size hypothesis (offending components {offending:?})"
    )]
    StructuralFailure { offending: Vec<usize> },
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("control references edge {i}->{j} which is not in the graph")]
    UnknownEdge { i: usize, j: usize },
    #[error("inconsistent schedule: {0}")]
    InconsistentSchedule(String),
    #[error("step {dt} exceeds the shortest interval {min_interval}")]
    StepTooLarge { dt: f64, min_interval: f64 },
    #[error("steering from waypoint {index} failed: residual {residual:e} exceeds {limit:e}")]
    SegmentFailure {
        index: usize,
        residual: f64,
        limit: f64,
    },
    #[error("fast and slow rank paths disagree ({fast} vs {slow})")]
    RankPathMismatch { fast: usize, slow: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for malformed input and I/O failures, as opposed to domain errors.
    pub fn is_format_error(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
