use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least 2 observations, got {0}")]
    DimensionTooSmall(usize),
    #[error("column {0} has zero sample variance")]
    ZeroVarianceColumn(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix asymmetry {0} exceeds tolerance")]
    AsymmetryExceeded(f64),
    #[error("diagonal entry {0} is not 1")]
    DiagonalNotUnit(usize),
    #[error("entry ({0}, {1}) lies outside [-1, 1]")]
    EntryOutOfRange(usize, usize),
    #[error("diagonal entry {0} is not 0")]
    DiagonalNotZero(usize),
    #[error("entry ({0}, {1}) is negative")]
    NegativeEntry(usize, usize),
    #[error("value {value} at ({i}, {j}) lies outside the transform domain")]
    DomainExceeded { i: usize, j: usize, value: f64 },
    #[error("transform does not pass through the origin (f(0) = {0})")]
    NotThroughOrigin(f64),
    #[error("grid has {got} points, need at least {need}")]
    GridTooSmall { got: usize, need: usize },
    #[error("grid abscissae must be non-negative and strictly ascending (index {0})")]
    GridNotAscending(usize),
    #[error("transform values must be finite and non-negative (index {0})")]
    InvalidTransformValue(usize),
    #[error("unknown builtin transform `{0}`")]
    UnknownTransform(String),
    #[error("theta {0} outside the open interval (0, pi/2)")]
    ThetaOutOfRange(f64),
    #[error("need at least {need} variables, got {got}")]
    TooFewVariables { got: usize, need: usize },
    #[error("cut size {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("sample size must be at least 2, got {0}")]
    SampleSizeTooSmall(usize),
    #[error("{0} names given for {1} variables")]
    NameCountMismatch(usize, usize),
    #[error("constructed correlation matrix failed the PSD check (min eigenvalue {0})")]
    NotRealizable(f64),
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
