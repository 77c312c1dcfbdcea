use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An evidence component was below zero.
    NegativeEvidence { index: usize, value: f64 },
    /// A value that must be finite was NaN or infinite.
    NonFinite { what: &'static str, index: usize },
    /// Two sequences that must have equal length did not.
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Fewer than two classes.
    TooFewClasses { found: usize },
    /// An index (class, label) outside its valid range.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    /// A Dirichlet concentration below one.
    ConcentrationBelowOne { index: usize, value: f64 },
    /// A target vector that is not one-hot.
    NotOneHot,
    /// A probability vector with negative entries or not summing to one.
    NotNormalized { sum: f64 },
    /// A standard deviation that must be strictly positive.
    NonPositiveSigma { index: usize, value: f64 },
    /// Special-function argument outside `x > 0`.
    Domain { function: &'static str, x: f64 },
    /// An input collection that must not be empty.
    Empty { what: &'static str },
    /// A ranking metric that needs both classes got only one.
    SingleClass { positives: usize, negatives: usize },
    /// Records being compared do not share one class count.
    CardinalityMismatch { detail: String },
    /// A configuration parameter outside its allowed range.
    InvalidParameter { name: &'static str, detail: String },
    /// Training produced a non-finite loss.
    Diverged { step: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NegativeEvidence { index, value } => {
                write!(f, "negative evidence at index {index} ({value})")
            }
            Error::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Error::LengthMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Error::TooFewClasses { found } => {
                write!(f, "at least 2 classes are required, found {found}")
            }
            Error::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range for {len} classes")
            }
            Error::ConcentrationBelowOne { index, value } => {
                write!(f, "concentration below 1 at index {index} ({value})")
            }
            Error::NotOneHot => f.write_str("target vector is not one-hot"),
            Error::NotNormalized { sum } => {
                write!(f, "probabilities must be non-negative and sum to 1 (sum = {sum})")
            }
            Error::NonPositiveSigma { index, value } => {
                write!(f, "sigma must be > 0, found {value} at index {index}")
            }
            Error::Domain { function, x } => write!(f, "{function}({x}) is undefined for x <= 0"),
            Error::Empty { what } => write!(f, "{what} must not be empty"),
            Error::SingleClass {
                positives,
                negatives,
            } => write!(
                f,
                "need at least one positive and one negative sample ({positives} positive, {negatives} negative)"
            ),
            Error::CardinalityMismatch { detail } => write!(
                f,
                "class cardinality differs between records ({detail}); run audit_cardinality first"
            ),
            Error::InvalidParameter { name, detail } => write!(f, "invalid {name}: {detail}"),
            Error::Diverged { step } => write!(f, "training diverged at step {step} (non-finite loss)"),
        }
    }
}

impl core::error::Error for Error {}
