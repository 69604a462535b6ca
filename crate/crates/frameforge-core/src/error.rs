//! Error type shared by the core modules.
//!
//! Variants name the contract that was violated rather than the call site;
//! the companion CLI crate maps them onto exit codes and user messages.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong in the core pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid/lattice dimension outside the supported range {1, 2, 3}.
    DimTooLarge { dim: usize },
    /// Two objects that must share a dimension do not.
    DimMismatch { expected: usize, got: usize },
    /// Grid parameters unusable (non-positive half width, too few points, …).
    InvalidGrid(String),
    /// Activation parameters unusable for the requested family.
    InvalidSpec(String),
    /// A quadrature pass met a non-finite sample.
    NaNEncountered,
    /// Requested an analytic derivative of a non-smooth family exactly at a kink.
    NonSmoothAtPoint { coord: f64 },
    /// Operation requires a smooth activation family.
    NonSmoothFamily,
    /// `∫σ` vanishes on the grid, so no scale can normalize it.
    NotNormalizable { integral: f64 },
    /// Decay certification did not stabilize when the sample radius doubled.
    Unstable { relative_change: f64 },
    /// Too few sampled tuples satisfied the check's precondition.
    TooFewValidSamples { valid: usize, required: usize },
    /// Lattice enumeration would exceed the configured cap.
    TooManyPoints { requested: usize, cap: usize },
    /// Every candidate atom fell below the norm floor.
    EmptyDictionary,
    /// Greedy selection ran out of unselected atoms.
    DictionaryExhausted { selected: usize, available: usize },
    /// Gram matrix of selected atoms is numerically singular even after
    /// one ridge-stabilized retry.
    GramSingular,
    /// Least-squares fit of the shifted-base combination is singular.
    FitSingular,
    /// Rate verification requested without a coefficient-sum bound.
    MissingBound,
    /// Expansion has no terms, so there is nothing to convert.
    EmptyExpansion,
    /// Activation is not flagged as factoring through the all-ones map.
    NotSeparable,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimTooLarge { dim } => {
                write!(f, "dimension {dim} unsupported (expected 1, 2, or 3)")
            }
            Error::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidSpec(msg) => write!(f, "invalid activation spec: {msg}"),
            Error::NaNEncountered => write!(f, "non-finite value met during quadrature"),
            Error::NonSmoothAtPoint { coord } => {
                write!(f, "derivative requested at a kink (offending coordinate {coord})")
            }
            Error::NonSmoothFamily => write!(f, "operation requires a smooth activation family"),
            Error::NotNormalizable { integral } => {
                write!(f, "activation not normalizable: grid integral {integral:e}")
            }
            Error::Unstable { relative_change } => write!(
                f,
                "decay certificate unstable: {relative_change:.3}% change on radius doubling",
            ),
            Error::TooFewValidSamples { valid, required } => write!(
                f,
                "only {valid} samples met the precondition (need {required})",
            ),
            Error::TooManyPoints { requested, cap } => {
                write!(f, "lattice would hold {requested} points (cap {cap})")
            }
            Error::EmptyDictionary => write!(f, "no atom survived the norm floor"),
            Error::DictionaryExhausted { selected, available } => write!(
                f,
                "greedy loop needs more atoms than the dictionary holds ({selected} of {available} selected)",
            ),
            Error::GramSingular => {
                write!(f, "selected-atom Gram matrix singular after ridge retry")
            }
            Error::FitSingular => write!(f, "shifted-base least-squares system singular"),
            Error::MissingBound => write!(f, "rate check needs a coefficient-sum bound"),
            Error::EmptyExpansion => write!(f, "expansion has no terms"),
            Error::NotSeparable => {
                write!(f, "activation does not factor through the all-ones map")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
