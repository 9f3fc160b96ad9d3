//! Physical-measure futures dynamics
//!
//! ```text
//! dF_i / F_i = mu_i(t) dt + eta dZ^s + eta_bar B_i(t) dZ^delta
//! ```
//!
//! and exact-transition simulation of the state variables.

mod sim;

pub use sim::{
    path_rng, CashSchedule, ExactTransition, Measure, PathMatrix, PathSet, PathSimulator, PathTerminal,
    PointView, RecordedPath, SimConfig, MAX_CONTRACTS,
};

use alloc::vec;

use crate::error::{Error, Result};
use crate::model::{ContractSpec, MarketState, ModelParams, RiskPrefs};
use crate::pricing::b_of_tau;

/// Simulates `(X, delta)` and the futures prices of `contracts` along
/// `cfg.n_paths` paths, sequentially.
pub fn simulate_state(
    params: &ModelParams,
    init: MarketState,
    cfg: &SimConfig,
    contracts: &[ContractSpec],
) -> Result<PathSet> {
    Ok(PathSimulator::new(params, init, cfg, contracts)?.simulate())
}

/// Optimal cash schedule on the grid `times`: the single-contract strategy
/// for one contract, the pair strategy for two.
pub fn optimal_schedule(
    times: &[f64],
    contracts: &[ContractSpec],
    params: &ModelParams,
    prefs: &RiskPrefs,
) -> Result<CashSchedule> {
    match *contracts {
        [c] => CashSchedule::single(times, 0, c, params, prefs),
        [c1, c2] => CashSchedule::pair(times, c1, c2, params, prefs),
        _ => Err(Error::InvalidSimConfig("wealth simulation trades one or two contracts")),
    }
}

/// Simulates state, futures and the wealth of the optimal strategy on
/// `contracts` (one or two), physical measure only.
pub fn simulate_wealth(
    params: &ModelParams,
    prefs: &RiskPrefs,
    contracts: &[ContractSpec],
    init: MarketState,
    w0: f64,
    cfg: &SimConfig,
) -> Result<PathSet> {
    if cfg.measure != Measure::Physical {
        return Err(Error::WealthUnderRiskNeutral);
    }
    prefs.validate(contracts)?;
    let sim = PathSimulator::new(params, init, cfg, contracts)?;
    let schedule = optimal_schedule(sim.times(), contracts, params, prefs)?;
    Ok(sim.with_wealth(w0, vec![schedule])?.simulate())
}

/// Drift, volatility and `B` coefficient of one contract at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuturesDynamics {
    pub mu_i: f64,
    pub sigma_i: f64,
    pub b: f64,
    pub t: f64,
    pub maturity: f64,
}

impl FuturesDynamics {
    pub fn new(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<Self> {
        let tau = contract.time_to_maturity(t)?;
        let b = b_of_tau(tau, params.kappa);
        Ok(Self {
            mu_i: drift_of_b(b, params),
            sigma_i: libm::sqrt(covariance_coeff(b, b, params)),
            b,
            t,
            maturity: contract.maturity,
        })
    }

    /// Sharpe ratio `mu_i / sigma_i`.
    pub fn sharpe(&self) -> f64 {
        self.mu_i / self.sigma_i
    }
}

/// `mu - r + lambda B`, i.e. `mu - r - lambda (1 - exp(-kappa tau)) / kappa`.
#[inline]
pub fn drift_of_b(b: f64, params: &ModelParams) -> f64 {
    params.mu - params.r + params.lambda * b
}

/// Instantaneous covariance rate of `dF_i/F_i` and `dF_j/F_j`:
/// `eta^2 + rho eta eta_bar (B_i + B_j) + eta_bar^2 B_i B_j`.
///
/// With `b_i == b_j` this is `sigma_i^2`.
#[inline]
pub fn covariance_coeff(b_i: f64, b_j: f64, params: &ModelParams) -> f64 {
    let ModelParams { eta, eta_bar, rho, .. } = *params;
    eta * eta + rho * eta * eta_bar * (b_i + b_j) + eta_bar * eta_bar * (b_i * b_j)
}

pub fn drift_mu(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<f64> {
    let tau = contract.time_to_maturity(t)?;
    Ok(drift_of_b(b_of_tau(tau, params.kappa), params))
}

pub fn vol_sigma(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<f64> {
    Ok(FuturesDynamics::new(t, contract, params)?.sigma_i)
}

/// Instantaneous correlation of the two contracts' Brownian drivers.
/// Exactly 1 when the `B` coefficients coincide.
pub fn corr_rho12(t: f64, c1: ContractSpec, c2: ContractSpec, params: &ModelParams) -> Result<f64> {
    let b1 = b_of_tau(c1.time_to_maturity(t)?, params.kappa);
    let b2 = b_of_tau(c2.time_to_maturity(t)?, params.kappa);
    Ok(correlation_of_b(b1, b2, params))
}

pub(crate) fn correlation_of_b(b1: f64, b2: f64, params: &ModelParams) -> f64 {
    let v1 = covariance_coeff(b1, b1, params);
    let v2 = covariance_coeff(b2, b2, params);
    let c = covariance_coeff(b1, b2, params);
    (c / libm::sqrt(v1 * v2)).min(1.0)
}
