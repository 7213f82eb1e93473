use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not fit together.
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NotSquare { rows: usize, cols: usize },
    /// ‖H − Hᵀ‖_F exceeded the tolerance relative to ‖H‖_F.
    NotSymmetric { asymmetry: f64, tolerance: f64 },
    NonFinite(&'static str),
    Empty(&'static str),
    InvalidArgument(String),
    /// A dataset assumption required by an operation does not hold.
    Assumption { name: &'static str, detail: String },
    /// The sphere path planner could not produce a path meeting its invariants.
    Planner(String),
    Degenerate(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, expected, found } => write!(
                f,
                "{op}: dimension mismatch, expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::NotSquare { rows, cols } => write!(f, "matrix is not square ({rows}x{cols})"),
            Error::NotSymmetric { asymmetry, tolerance } => write!(
                f,
                "matrix is not symmetric: ||H - H^T||_F = {asymmetry:e} exceeds {tolerance:e}"
            ),
            Error::NonFinite(what) => write!(f, "{what} contains a non-finite value"),
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Assumption { name, detail } => write!(f, "{name} violated: {detail}"),
            Error::Planner(msg) => write!(f, "sphere path planner failed: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
