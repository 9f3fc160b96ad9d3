//! Parameter and contract types shared by the pricing, dynamics and strategy
//! modules.
//!
//! All times live on one clock measured in year fractions, with `t = 0` as
//! "now". Contract maturities and the trading horizon are absolute points on
//! that clock.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest mean-reversion speed accepted; `B` and `alpha_tilde` divide by kappa.
pub const KAPPA_MIN: f64 = 1e-8;

/// Two-factor spot / convenience-yield model parameters.
///
/// `alpha` never enters a price-based strategy or value function; it is kept
/// because the physical-measure simulator needs it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelParams {
    /// Drift of the log spot under the physical measure (1/year).
    pub mu: f64,
    /// Mean-reversion speed of the convenience yield (1/year).
    pub kappa: f64,
    /// Physical-measure equilibrium convenience yield (1/year).
    pub alpha: f64,
    /// Spot volatility (1/sqrt(year)).
    pub eta: f64,
    /// Convenience-yield volatility (1/sqrt(year)).
    pub eta_bar: f64,
    /// Correlation of the spot and convenience-yield Brownian motions.
    pub rho: f64,
    /// Market price of convenience-yield risk (1/year).
    pub lambda: f64,
    /// Risk-free rate (1/year).
    pub r: f64,
}

impl ModelParams {
    /// WTI crude oil estimates commonly used as the reference parameter set,
    /// with `alpha = 0`.
    pub const fn reference() -> Self {
        Self {
            mu: 0.010,
            kappa: 0.800,
            alpha: 0.0,
            eta: 0.450,
            eta_bar: 0.500,
            rho: 0.750,
            lambda: 0.050,
            r: 0.001,
        }
    }

    /// Returns the parameters unchanged if every model constraint holds.
    pub fn validate(self) -> Result<Self> {
        self.check_common()?;
        positive("eta", self.eta)?;
        positive("eta_bar", self.eta_bar)?;
        Ok(self)
    }

    /// Like [`validate`](Self::validate) but accepts `eta = eta_bar = 0`.
    /// Only the noise-free simulator limit uses this.
    pub fn validate_allowing_zero_noise(self) -> Result<Self> {
        self.check_common()?;
        if self.eta < 0.0 {
            return Err(Error::NonPositive { name: "eta", value: self.eta });
        }
        if self.eta_bar < 0.0 {
            return Err(Error::NonPositive { name: "eta_bar", value: self.eta_bar });
        }
        Ok(self)
    }

    fn check_common(&self) -> Result<()> {
        for (name, value) in [
            ("mu", self.mu),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("eta", self.eta),
            ("eta_bar", self.eta_bar),
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("r", self.r),
        ] {
            finite(name, value)?;
        }
        if self.kappa <= KAPPA_MIN {
            return Err(Error::KappaTooSmall(self.kappa));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::RhoOutOfRange(self.rho));
        }
        if self.r < 0.0 {
            return Err(Error::NegativeRate(self.r));
        }
        Ok(())
    }

    /// Risk-neutral equilibrium convenience yield `alpha - lambda / kappa`.
    pub fn alpha_tilde(&self) -> f64 {
        self.alpha - self.lambda / self.kappa
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// A futures contract, identified by its absolute maturity (year fraction).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ContractSpec {
    pub maturity: f64,
}

impl ContractSpec {
    pub fn new(maturity: f64) -> Result<Self> {
        finite("maturity", maturity)?;
        if maturity < 0.0 {
            return Err(Error::NegativeMaturity(maturity));
        }
        Ok(Self { maturity })
    }

    /// Time to maturity; errors if `t` is past maturity.
    pub fn time_to_maturity(&self, t: f64) -> Result<f64> {
        finite("t", t)?;
        if t > self.maturity {
            return Err(Error::PastMaturity { t, maturity: self.maturity });
        }
        Ok(self.maturity - t)
    }
}

/// Exponential-utility investor: `U(w) = -exp(-gamma w)` over `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RiskPrefs {
    /// Absolute risk aversion (1/wealth unit).
    pub gamma: f64,
    /// Trading horizon T (year fraction).
    pub horizon: f64,
}

impl RiskPrefs {
    /// Checks `gamma > 0` and that the horizon does not run past any traded
    /// contract's maturity.
    pub fn validate(self, contracts: &[ContractSpec]) -> Result<Self> {
        positive("gamma", self.gamma)?;
        finite("horizon", self.horizon)?;
        if self.horizon < 0.0 {
            return Err(Error::NonPositive { name: "horizon", value: self.horizon });
        }
        for c in contracts {
            if self.horizon > c.maturity {
                return Err(Error::HorizonExceedsMaturity {
                    horizon: self.horizon,
                    maturity: c.maturity,
                });
            }
        }
        Ok(self)
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        finite("t", t)?;
        if t > self.horizon {
            return Err(Error::PastHorizon { t, horizon: self.horizon });
        }
        Ok(())
    }
}

/// Snapshot of the two state variables at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MarketState {
    pub t: f64,
    /// Log spot price.
    pub x: f64,
    /// Instantaneous convenience yield.
    pub delta: f64,
}

impl MarketState {
    pub fn new(t: f64, x: f64, delta: f64) -> Result<Self> {
        finite("t", t)?;
        finite("x", x)?;
        finite("delta", delta)?;
        if t < 0.0 {
            return Err(Error::NonPositive { name: "t", value: t });
        }
        Ok(Self { t, x, delta })
    }

    pub fn spot(&self) -> f64 {
        libm::exp(self.x)
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_params_validate() {
        assert!(ModelParams::reference().validate().is_ok());
    }

    #[test]
    fn kappa_floor() {
        let p = ModelParams { kappa: 0.0, ..ModelParams::reference() };
        let err = p.validate().unwrap_err();
        assert_eq!(err, Error::KappaTooSmall(0.0));
        assert!(alloc::format!("{err}").contains("kappa must exceed 1e-8"));
        let p = ModelParams { kappa: 1e-9, ..ModelParams::reference() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn rho_must_be_interior() {
        for rho in [1.0, -1.0, 1.5] {
            let p = ModelParams { rho, ..ModelParams::reference() };
            let err = p.validate().unwrap_err();
            assert!(alloc::format!("{err}").contains("rho must lie strictly in (-1,1)"));
        }
    }

    #[test]
    fn rejects_bad_vols_and_rate() {
        let base = ModelParams::reference();
        assert!(ModelParams { eta: 0.0, ..base }.validate().is_err());
        assert!(ModelParams { eta_bar: -0.1, ..base }.validate().is_err());
        assert!(ModelParams { r: -0.01, ..base }.validate().is_err());
        assert!(ModelParams { mu: f64::NAN, ..base }.validate().is_err());
        assert!(ModelParams { eta: 0.0, eta_bar: 0.0, ..base }
            .validate_allowing_zero_noise()
            .is_ok());
    }

    #[test]
    fn alpha_tilde_values() {
        let base = ModelParams::reference();
        let p = ModelParams { lambda: 0.0, alpha: 0.3, ..base };
        assert_eq!(p.alpha_tilde(), 0.3);
        let p = ModelParams { alpha: 0.1, lambda: 0.05, kappa: 0.8, ..base };
        assert!((p.alpha_tilde() - 0.0375).abs() < 1e-15);
        assert!((base.alpha_tilde() + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn alpha_tilde_linear_in_lambda() {
        let base = ModelParams::reference();
        let at = |lambda| ModelParams { lambda, ..base }.alpha_tilde();
        let slope1 = (at(0.1) - at(0.0)) / 0.1;
        let slope2 = (at(0.3) - at(0.1)) / 0.2;
        assert!((slope1 + 1.0 / base.kappa).abs() < 1e-12);
        assert!((slope2 + 1.0 / base.kappa).abs() < 1e-12);
    }

    #[test]
    fn horizon_must_not_exceed_maturities() {
        let c = [ContractSpec::new(13.0 / 12.0).unwrap(), ContractSpec::new(0.5).unwrap()];
        let prefs = RiskPrefs { gamma: 0.01, horizon: 1.0 };
        assert!(matches!(
            prefs.validate(&c),
            Err(Error::HorizonExceedsMaturity { .. })
        ));
        assert!(prefs.validate(&c[..1]).is_ok());
        assert!(RiskPrefs { gamma: 0.0, horizon: 1.0 }.validate(&[]).is_err());
    }

    #[test]
    fn contract_time_to_maturity() {
        let c = ContractSpec::new(1.0).unwrap();
        assert_eq!(c.time_to_maturity(0.25).unwrap(), 0.75);
        assert!(c.time_to_maturity(1.5).is_err());
        assert!(ContractSpec::new(-1.0).is_err());
    }
}
