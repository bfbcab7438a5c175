use thiserror::Error;

/// Errors raised by the simulator and the learning code built on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot encode a zero vector (row {row})")]
    ZeroVector { row: usize },

    #[error("state dimension {requested} exceeds the amplitude cap {cap}")]
    DimensionOverflow { requested: usize, cap: usize },

    #[error("register layouts do not match: {0}")]
    LayoutMismatch(String),

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("no register named `{0}`")]
    UnknownRegister(String),

    #[error("outcome {outcome} out of range for register `{register}` of dimension {dim}")]
    OutcomeOutOfRange {
        register: String,
        outcome: usize,
        dim: usize,
    },

    #[error("post-selected branch has probability {prob:e}")]
    ZeroBranch { prob: f64 },

    #[error("address {address} out of range for a store with {cells} cells")]
    AddressOutOfRange { address: usize, cells: usize },

    #[error("address amplitudes are not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("truncation order search exceeded {cap} terms (x_bound = {x_bound}, q = {q})")]
    TruncationTooTight { x_bound: f64, q: u32, cap: usize },

    #[error("singular LS-SVM system (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },

    #[error("training set needs both classes")]
    SingleClass,

    #[error("label {0} is not +1 or -1")]
    InvalidLabel(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// I/O and parse failures, as opposed to domain errors.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
