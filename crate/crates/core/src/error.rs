use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input was malformed or violated a structural requirement.
    Validation,
    /// A scan hit its cap before reaching the target distance.
    CapExceeded,
    /// A numerical routine failed to meet its residual bound.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty state space")]
    Empty,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("negative entry {value:e} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, expected {expected}")]
    RowSum { row: usize, sum: f64, expected: f64 },

    #[error("distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("matrix is not symmetric at ({row}, {col}): difference {difference:e}")]
    Asymmetric {
        row: usize,
        col: usize,
        difference: f64,
    },

    #[error("reducible: state {to} is not reachable from state {from}")]
    Reducible { from: usize, to: usize },

    #[error("periodic: state {state} has period {period}")]
    Periodic { state: usize, period: usize },

    #[error("detailed balance fails at ({row}, {col}) by {violation:e}")]
    NotReversible {
        row: usize,
        col: usize,
        violation: f64,
    },

    #[error("`{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("degenerate spectrum: second largest absolute eigenvalue is {second}")]
    DegenerateSpectrum { second: f64 },

    #[error("ground state entry {index} is {value:e}; input is near-reducible")]
    VanishingGroundState { index: usize, value: f64 },

    #[error("row {row} departure rate {rate} exceeds uniformization rate {lambda}")]
    RateTooSmall { row: usize, rate: f64, lambda: f64 },

    #[error("mixing scan reached cap {cap} with distance {last_distance} still above target")]
    CapExceeded { cap: f64, last_distance: f64 },

    #[error("adiabatic scan reached cap {cap} without error <= {epsilon}")]
    AdiabaticCapExceeded {
        cap: f64,
        epsilon: f64,
        curve: Vec<(f64, f64)>,
    },

    #[error("numerical failure in {context}: residual {residual:e}")]
    Numerical {
        context: &'static str,
        residual: f64,
    },

    #[error("{n} spins exceed the dense limit of {max}")]
    TooManySpins { n: usize, max: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::CapExceeded { .. } | Error::AdiabaticCapExceeded { .. } => {
                ErrorKind::CapExceeded
            }
            Error::Numerical { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn out_of_range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { name, value, range }
    }
}
