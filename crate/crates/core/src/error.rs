use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Validation and domain errors raised by the model, pricing and strategy code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("kappa must exceed 1e-8 (got {0})")]
    KappaTooSmall(f64),
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("rho must lie strictly in (-1,1) (got {0})")]
    RhoOutOfRange(f64),
    #[error("r must be non-negative (got {0})")]
    NegativeRate(f64),
    #[error("maturity must be non-negative (got {0})")]
    NegativeMaturity(f64),
    #[error("time t = {t} is past contract maturity {maturity}")]
    PastMaturity { t: f64, maturity: f64 },
    #[error("time t = {t} is past the trading horizon {horizon}")]
    PastHorizon { t: f64, horizon: f64 },
    #[error("horizon {horizon} exceeds contract maturity {maturity}")]
    HorizonExceedsMaturity { horizon: f64, maturity: f64 },
    #[error("futures price must be positive (got {0})")]
    NonPositivePrice(f64),
    #[error("maturities {t1} and {t2} are closer than 1e-6 years; the pair strategy is singular")]
    MaturityCollision { t1: f64, t2: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(&'static str),
    #[error("wealth simulation requires the physical measure")]
    WealthUnderRiskNeutral,
}
