use thiserror::Error;

use crate::averaging::StepReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range ({what})")]
    Range { index: usize, what: &'static str },

    #[error("policy error: {0}")]
    Policy(String),

    #[error("invalid averaging step: {0}")]
    InvalidStep(StepReport),

    #[error("certificate violation at pair ({i}, {j}): D = {donation} < -{tolerance}")]
    CertificateViolation {
        i: usize,
        j: usize,
        donation: f64,
        tolerance: f64,
    },

    #[error("account bound violated at pair ({i}, {j}): B + C short by {shortfall} (tolerance {tolerance})")]
    AccountBound {
        i: usize,
        j: usize,
        shortfall: f64,
        tolerance: f64,
    },

    #[error("payment failure: D(u,u+1) = {available} cannot cover energy {due}")]
    PaymentFailure { available: f64, due: f64 },

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("recursion depth {0} exceeded")]
    DepthExceeded(usize),

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            expected,
        })
    }
}

/// `s` must lie in (0, 1].
pub(crate) fn check_s(s: f64) -> Result<()> {
    check_range("s", s, s > 0.0 && s <= 1.0, "(0, 1]")
}

/// `rho` must lie in (0, 1/2].
pub(crate) fn check_rho(rho: f64) -> Result<()> {
    check_range("rho", rho, rho > 0.0 && rho <= 0.5, "(0, 1/2]")
}
