//! Error type shared by every module of the kernel.

use thiserror::Error;

/// Every failure the kernel can report.
///
/// Variants are grouped loosely by the module that raises them; callers that
/// need to map errors onto exit codes use [`Error::is_check_failure`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("coefficient domains differ: {0} vs {1}")]
    DomainMismatch(String, String),
    #[error("leading coefficient is not invertible in the coefficient domain")]
    NonInvertibleLeading,
    #[error("division by the zero series")]
    ZeroDivide,
    #[error("result order {0} is below 1; supply more input coefficients")]
    OrderUnderflow(i64),
    #[error("bad constant term: {0}")]
    BadConstantTerm(String),
    #[error("eta quotient has non-integral q-offset {0}/24")]
    FractionalLeadExponent(i64),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("index must be positive, got {0}")]
    NonPositiveIndex(i64),
    #[error("leading coefficient must be 1: {0}")]
    BadLeadingCoefficient(String),
    #[error("plus-space support violated at exponent {0}")]
    PlusSpaceViolation(i64),
    #[error("power sums are inconsistent: {0}")]
    InconsistentPowerSums(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("bad discriminant {0}: {1}")]
    BadDiscriminant(i64, String),
    #[error("no represented integer coprime to {0} found within the search bound")]
    NoCoprimeRepresentationFound(i64),
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("methods disagree: {0}")]
    MethodDisagreement(String),
    #[error("{0} is not invariant under the modular group")]
    NotInvariant(String),
    #[error("finite-difference step {0} is too large for Im(tau) = {1}")]
    StepTooLarge(String, String),
    #[error("result is not real: imaginary part {0}")]
    NonRealResult(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("linear solve produced a non-integral coefficient: {0}")]
    NonIntegralSolution(String),
    #[error("solution is not unique: {0}")]
    UniquenessFailure(String),
    #[error("coefficient is not real: {0}")]
    NonRealCoefficient(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that signal a failed mathematical check (a bug trap
    /// firing) rather than bad input.
    pub fn is_check_failure(&self) -> bool {
        matches!(
            self,
            Error::InternalInconsistency(_)
                | Error::MethodDisagreement(_)
                | Error::NonRealResult(_)
                | Error::NonIntegralSolution(_)
                | Error::UniquenessFailure(_)
                | Error::NonRealCoefficient(_)
                | Error::InconsistentPowerSums(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
