use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction rejected (cell count below 4, bad extent, bad dimension).
    InvalidGrid(&'static str),
    /// A non-finite value was found at `index`.
    Corrupted { index: usize, value: f64 },
    /// Values do not match the grid cell count.
    LengthMismatch { expected: usize, found: usize },
    /// Two fields that must share a grid do not.
    GridMismatch,
    /// A face-centered vector field was required.
    CenteringMismatch,
    /// `n` (or another field required to be nonnegative) went negative.
    PositivityViolation { index: usize, value: f64 },
    /// The implicit diffusion solve did not reach its tolerance.
    LinearSolve { iterations: usize, residual: f64 },
    /// Samples must be strictly increasing in time.
    TimeOrdering { previous: f64, next: f64 },
    /// Not enough samples for the requested operation.
    InsufficientData { needed: usize, found: usize },
    /// A scalar argument is out of its admissible range.
    InvalidArgument(&'static str),
    /// The operation requires a periodic domain.
    RequiresTorus,
    /// A solve crossed the blow-up threshold before its end time.
    ApproachingBlowup { t: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::Corrupted { index, value } => {
                write!(f, "non-finite value {value} at cell {index}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} values, found {found}")
            }
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::CenteringMismatch => f.write_str("vector field is not face-centered"),
            Error::PositivityViolation { index, value } => {
                write!(f, "negative value {value} at cell {index}")
            }
            Error::LinearSolve { iterations, residual } => write!(
                f,
                "conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})"
            ),
            Error::TimeOrdering { previous, next } => {
                write!(f, "samples out of order: t = {next} after t = {previous}")
            }
            Error::InsufficientData { needed, found } => {
                write!(f, "need at least {needed} samples, found {found}")
            }
            Error::InvalidArgument(why) => write!(f, "invalid argument: {why}"),
            Error::RequiresTorus => f.write_str("operation requires a periodic torus"),
            Error::ApproachingBlowup { t } => write!(f, "blow-up threshold crossed at t = {t}"),
        }
    }
}

impl core::error::Error for Error {}
