use thiserror::Error;

/// Failures while reading the text maze format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MazeParseError {
    #[error("maze text is empty")]
    Empty,
    #[error("unexpected character {ch:?} at row {row}, column {col}")]
    BadChar { row: usize, col: usize, ch: char },
    #[error("row {row} has width {found}, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row} has trailing whitespace")]
    TrailingWhitespace { row: usize },
    #[error("carriage return found; maze files use LF line endings")]
    CarriageReturn,
    #[error("no start cell 'S'")]
    MissingStart,
    #[error("no goal cell 'G'")]
    MissingGoal,
    #[error("more than one start cell 'S'")]
    DuplicateStart,
    #[error("more than one goal cell 'G'")]
    DuplicateGoal,
    #[error("goal is not reachable from start")]
    UnreachableGoal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] MazeParseError),
    #[error("invalid maze: {0}")]
    InvalidMaze(String),
    #[error("discount must lie in [0, 1), got {0}")]
    InvalidDiscount(f64),
    #[error("transition row ({state}, {action}) sums to {sum}")]
    BadTransitionRow { state: usize, action: usize, sum: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("symmetries need a square maze, got {width}x{height}")]
    NonSquare { width: usize, height: usize },
    #[error("goal unreachable from state {0}")]
    Unreachable(usize),
    #[error("non-finite inverse temperature at ground {ground}, simulated {simulated}")]
    NonFiniteBeta { ground: usize, simulated: usize },
    #[error("default policy has zero mass at state {state}, action {action} where the plan is positive")]
    Support { state: usize, action: usize },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at outer iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("non-finite planning cost at state {0}")]
    NonFiniteCost(usize),
    #[error("invalid distance matrix: {0}")]
    DistanceMatrix(String),
    #[error("degenerate regression input: {0}")]
    Degenerate(String),
    #[error("linear system could not be solved")]
    Singular,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
