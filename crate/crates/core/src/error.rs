use alloc::boxed::Box;
use core::fmt;

use crate::onestep::LineSearchTrace;
use crate::stable::StableParams;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the estimation pipeline.
#[derive(Clone, Debug)]
#[non_exhaustive]
pub enum Error {
    /// A parameter fell outside its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// Quadrature or root finding did not reach the requested accuracy.
    NumericFailure {
        what: &'static str,
        x: f64,
        params: Option<StableParams>,
        achieved: f64,
    },
    /// Input lengths disagree.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Centered design is not of full column rank.
    SingularDesign,
    /// A residual (or other ranked quantity) was NaN.
    NotANumber { index: usize },
    /// Score function violates its admissibility conditions.
    InvalidScore(&'static str),
    /// The LAD linear program could not be solved.
    LinearProgram(&'static str),
    /// The rank statistic at the preliminary estimate is numerically zero.
    DegenerateStatistic { h0: f64 },
    /// No sign change of the h-function within the scan budget.
    LineSearch(Box<LineSearchTrace>),
    /// Cross-information of the reference score vanishes.
    UndefinedAre,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            Error::NumericFailure {
                what,
                x,
                params,
                achieved,
            } => {
                write!(f, "{what} did not converge at x = {x}")?;
                if let Some(p) = params {
                    write!(f, " for {p}")?;
                }
                write!(f, " (achieved error {achieved:e})")
            }
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Error::SingularDesign => f.write_str("design matrix is singular after centering"),
            Error::NotANumber { index } => write!(f, "NaN value at index {index}"),
            Error::InvalidScore(why) => write!(f, "invalid score function: {why}"),
            Error::LinearProgram(why) => write!(f, "LAD linear program failed: {why}"),
            Error::DegenerateStatistic { h0 } => {
                write!(f, "rank statistic is degenerate at the preliminary estimate (h(0) = {h0:e})")
            }
            Error::LineSearch(trace) => write!(
                f,
                "no sign change of h within {} grid steps (c = {})",
                trace.evaluations.len().saturating_sub(1),
                trace.c
            ),
            Error::UndefinedAre => f.write_str("reference cross-information vanishes; ARE undefined"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    /// Short machine-readable tag, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NumericFailure { .. } => "numeric_failure",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SingularDesign => "singular_design",
            Error::NotANumber { .. } => "nan",
            Error::InvalidScore(_) => "invalid_score",
            Error::LinearProgram(_) => "linear_program",
            Error::DegenerateStatistic { .. } => "degenerate_statistic",
            Error::LineSearch(_) => "line_search",
            Error::UndefinedAre => "undefined_are",
        }
    }
}
