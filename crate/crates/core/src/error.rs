use thiserror::Error;

/// Errors raised by the allocation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("vertical distance {vertical} m is not inside the cell radius {radius} m; the railway never enters the cell")]
    EmptyChord { vertical: f64, radius: f64 },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("delay profile has no taps")]
    EmptyProfile,

    #[error("delay profile has zero total power")]
    ZeroPowerProfile,

    #[error("the closed-form ICI approximation only applies off the diagonal (k = {0})")]
    DiagonalApproximation(i64),

    #[error(
        "normalized Doppler f_D*T = {0} is outside the small-Doppler regime of the approximation"
    )]
    DopplerTooLarge(f64),

    #[error("ICI window {window} exceeds the {available:.3} subcarriers allocated to the relay")]
    WindowExceedsAllocation { window: usize, available: f64 },

    #[error("quadrature did not converge after {panels} panels")]
    QuadratureNotConverged { panels: usize },

    #[error("rate target {r_th} bit/s is not reachable with beta = {beta} (local users get at most {available} bit/s)")]
    Infeasible {
        beta: f64,
        r_th: f64,
        available: f64,
    },

    #[error("no scheduling period with index {0}")]
    UnknownPeriod(i64),
}

pub type Result<T> = std::result::Result<T, Error>;
