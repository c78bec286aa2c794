use crate::market::{Firm, SegmentKind};
use crate::rational::Rational;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("coverage violation: need v > 2t, got v = {v}, t = {t}")]
    CoverageViolation { v: Rational, t: Rational },

    #[error("transport cost must be positive, got t = {0}")]
    NonPositiveTransportCost(Rational),

    #[error("mass violation: {0}")]
    MassViolation(String),

    #[error("density violation on segment {segment}: {reason}")]
    DensityViolation { segment: SegmentKind, reason: String },

    #[error("interval violation: {0}")]
    IntervalViolation(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("no pure equilibrium: {0}")]
    NoPureEquilibrium(String),

    #[error("best-response iteration did not converge after {iterations} steps (last prices {p_a}, {p_b})")]
    NonConvergence {
        iterations: usize,
        p_a: Rational,
        p_b: Rational,
    },

    #[error("demand of firm {0} is identically zero")]
    DegenerateDemand(Firm),

    #[error("outcomes were computed for different market configurations")]
    ConfigMismatch,

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("bad masses: {0}")]
    BadMasses(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("parse error at {field}: {message}")]
    Parse { field: String, message: String },
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
