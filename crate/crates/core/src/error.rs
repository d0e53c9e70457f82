//! Error type shared across the library.

use std::fmt;

/// Everything that can go wrong in the numerical layers.
///
/// Iterative failures carry their partial results so callers can report
/// diagnostics instead of discarding hours of work.
#[derive(Debug, Clone, PartialEq)]
pub enum CzError {
    /// Malformed argument or input data.
    Input(String),
    /// Root bracketing failed: no sign change over [lo, hi].
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    /// A sample came back NaN or infinite.
    NonFinite { context: &'static str, at: f64 },
    /// An iterative scheme exhausted its budget; carries the partial value.
    Convergence {
        context: &'static str,
        partial_re: f64,
        partial_im: f64,
        estimate: f64,
        detail: String,
    },
    /// Some coordinate axis stays flat at every ladder level.
    FiniteType { axis: usize },
    /// Flat directions are not axis-aligned, so the ladder split is unsupported.
    Orientation(String),
    /// A convexity requirement failed (nonpositive pure coefficient, indefinite Hessian).
    Convexity(String),
    /// A mixed monomial grades below 1: the surface is not in normal form.
    NormalForm(String),
    /// Gauge evaluation hit a direction with H(theta) <= 0.
    DegenerateDirection { value: f64 },
    /// Parameter magnitude outside the calibrated range.
    Range { name: &'static str, value: f64, limit: f64 },
    /// An operation was invoked outside its stated precondition.
    Misuse(String),
    /// Geometric solve failed (implicit height bracket, cap refinement, ...).
    Geometry(String),
    /// Configuration asks for a combination the implementation does not cover.
    Unsupported(String),
}

impl fmt::Display for CzError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CzError::Input(msg) => write!(f, "invalid input: {msg}"),
            CzError::Bracket { lo, hi, f_lo, f_hi } => write!(
                f,
                "no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
            ),
            CzError::NonFinite { context, at } => {
                write!(f, "{context}: non-finite sample at {at}")
            }
            CzError::Convergence { context, partial_re, partial_im, estimate, detail } => write!(
                f,
                "{context}: budget exhausted (partial = {partial_re} + {partial_im}i, \
                 estimate = {estimate}; {detail})"
            ),
            CzError::FiniteType { axis } => write!(
                f,
                "surface is not of finite type: axis {axis} is flat at every level"
            ),
            CzError::Orientation(msg) => write!(f, "unsupported orientation: {msg}"),
            CzError::Convexity(msg) => write!(f, "convexity violation: {msg}"),
            CzError::NormalForm(msg) => write!(f, "not in normal form: {msg}"),
            CzError::DegenerateDirection { value } => {
                write!(f, "degenerate direction: H(theta) = {value} <= 0")
            }
            CzError::Range { name, value, limit } => {
                write!(f, "{name} = {value} outside calibrated range (|{name}| <= {limit})")
            }
            CzError::Misuse(msg) => write!(f, "misuse: {msg}"),
            CzError::Geometry(msg) => write!(f, "geometry failure: {msg}"),
            CzError::Unsupported(msg) => write!(f, "unsupported configuration: {msg}"),
        }
    }
}

impl std::error::Error for CzError {}

pub type Result<T> = std::result::Result<T, CzError>;
