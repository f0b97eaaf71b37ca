use thiserror::Error;

use crate::model::CaseTag;

/// Errors raised by the solvers and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid setup: {0}")]
    InvalidSetup(String),

    #[error("setup is classified as {actual:?}, expected {expected}")]
    WrongCase { expected: &'static str, actual: CaseTag },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("negative radicand {value:e} in {formula}")]
    Domain { formula: &'static str, value: f64 },

    #[error("momentum denominator vanished at t={t:e} (D={value:e})")]
    DenominatorVanished { t: f64, value: f64 },

    #[error("step size underflow at t={t:e} (h={h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("gas front crossed at t={t:e} without a bracketed event")]
    EventNotBracketed { t: f64 },

    #[error("particle events out of order at t={t:e} (next event at {next:e})")]
    NegativeEventTime { t: f64, next: f64 },

    #[error("gas extent L={half_width} too small for t_end={t_end}; need more than {required}")]
    DomainTooSmall { half_width: f64, t_end: f64, required: f64 },

    #[error("test function support [{t_lo}, {t_hi}] leaves the computed range [0, {t_max}]")]
    UnresolvedSupport { t_lo: f64, t_hi: f64, t_max: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
