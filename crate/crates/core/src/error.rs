use thiserror::Error;

/// Errors produced by the radial NLS toolkit.
#[derive(Debug, Error)]
pub enum NlsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported nonlinearity exponent p = {0} (need finite p >= 2)")]
    UnsupportedExponent(f64),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("radial Sobolev ratio undefined for the zero field")]
    UndefinedRatio,

    #[error("coercivity margin undefined: potential norm vanishes")]
    UndefinedMargin,

    #[error("no shooting bracket found for p = {p} in Q(0) in [{lo}, {hi}]")]
    BracketFailure { p: f64, lo: f64, hi: f64 },

    #[error("bisection tolerance {0:e} is below what double precision can resolve")]
    ToleranceUnreachable(f64),

    #[error("data with energy {0} cannot be normalized to M = E")]
    NotRescalable(f64),

    #[error("localization radius {radius} needs 2R < r_max = {r_max}")]
    WeightOverflow { radius: f64, r_max: f64 },

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("space-time estimate not applicable: {0}")]
    EstimateNotApplicable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NlsError>;

/// Rejects exponents outside the supported range `2 <= p < inf`.
pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 2.0 {
        Ok(())
    } else {
        Err(NlsError::UnsupportedExponent(p))
    }
}
