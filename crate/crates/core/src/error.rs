use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("invalid drive: {0}")]
    InvalidDrive(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("singular response: {0}")]
    SingularResponse(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integration failed at t = {t_last}: {reason}")]
    IntegrationFailure { t_last: f64, reason: String },

    #[error("steady state is unstable (max Re λ = {max_real_part:.3e})")]
    UnstableSteadyState { max_real_part: f64 },

    #[error("switch ratio undefined: minimum output {min_output:.3e} is not positive")]
    UndefinedRatio { min_output: f64 },

    #[error("gain undefined: input power modulation is zero")]
    UndefinedGain,

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("non-physical spectrum: {0}")]
    NonPhysicalSpectrum(String),

    #[error("singular closed-form denominator at omega = {omega}")]
    SingularDenominator { omega: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
