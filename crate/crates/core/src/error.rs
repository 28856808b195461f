use std::fmt;

/// Errors produced by model construction, analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Matrix or sequence dimensions are mutually inconsistent.
    DimensionMismatch(&'static str),
    /// An input matrix or sequence contains NaN or infinite entries.
    NonFinite(&'static str),
    /// A matrix required to be symmetric is not.
    NonSymmetric(&'static str),
    /// Supply matrices are not of the scalar (q·I, ½·I, r·I) form.
    NonCanonicalSupply,
    /// Static gain k = 0 has no output-feedback level.
    ZeroGain,
    /// Quantizer density must satisfy 0 < theta < 1 (equivalently 0 < delta < 1).
    InvalidQuantizerDensity,
    /// Dead zone must be finite and nonnegative.
    InvalidDeadZone,
    /// Slack constants xi must be strictly positive.
    NonPositiveXi,
    /// Loop constants beta must be strictly positive.
    NonPositiveBeta,
    /// Trigger constants theta1, theta2 must lie in (0, 1).
    InvalidTriggerTheta,
    /// Trigger design requires q1 < 0 and q2 < 0.
    QNotNegative,
    /// Sampling periods must be finite and nonnegative.
    InvalidSampling,
    /// Quantizer sector bounds delta must lie in [0, 1).
    InvalidDelta,
    /// The eigenvalue solver did not converge.
    EigenSolverFailed,
    /// Feasibility tolerance must be strictly positive.
    InvalidTolerance,
    /// Plant and controller both have direct feedthrough.
    AlgebraicLoop,
    /// State magnitude exceeded the divergence guard at grid point (i, j).
    NonFiniteState { i: usize, j: usize },
    /// Event-triggered simulation requires the plant-side quantizer.
    TriggerRequiresQuantizer,
    /// The dissipation LMI is infeasible over the whole search interval.
    InfeasibleEverywhere,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch(ctx) => write!(f, "dimension mismatch: {ctx}"),
            Error::NonFinite(ctx) => write!(f, "non-finite values: {ctx}"),
            Error::NonSymmetric(ctx) => write!(f, "matrix not symmetric: {ctx}"),
            Error::NonCanonicalSupply => write!(f, "supply is not of the (qI, I/2, rI) form"),
            Error::ZeroGain => write!(f, "static gain must be nonzero"),
            Error::InvalidQuantizerDensity => write!(f, "quantization density must lie in (0, 1)"),
            Error::InvalidDeadZone => write!(f, "dead zone must be finite and nonnegative"),
            Error::NonPositiveXi => write!(f, "xi constants must be strictly positive"),
            Error::NonPositiveBeta => write!(f, "beta constants must be strictly positive"),
            Error::InvalidTriggerTheta => write!(f, "theta1, theta2 must lie in (0, 1)"),
            Error::QNotNegative => write!(f, "trigger design requires q1 < 0 and q2 < 0"),
            Error::InvalidSampling => write!(f, "sampling periods must be finite and nonnegative"),
            Error::InvalidDelta => write!(f, "delta must lie in [0, 1)"),
            Error::EigenSolverFailed => write!(f, "eigenvalue solver failed to converge"),
            Error::InvalidTolerance => write!(f, "tolerance must be strictly positive"),
            Error::AlgebraicLoop => {
                write!(f, "algebraic loop: plant and controller both have direct feedthrough")
            }
            Error::NonFiniteState { i, j } => {
                write!(f, "state diverged at grid point ({i}, {j})")
            }
            Error::TriggerRequiresQuantizer => {
                write!(f, "event-triggered simulation requires the plant-side quantizer")
            }
            Error::InfeasibleEverywhere => {
                write!(f, "LMI infeasible over the whole search interval")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<V> = std::result::Result<V, Error>;
