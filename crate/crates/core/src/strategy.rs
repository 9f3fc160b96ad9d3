//! Optimal futures positions, value functions and certainty equivalents for
//! an exponential-utility investor.
//!
//! Positions are contract counts (positive = long). Cash exposures
//! `pi_i * F_i` depend on time only, never on the current prices.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix3;

use crate::dynamics::{correlation_of_b, covariance_coeff, FuturesDynamics};
use crate::error::{Error, Result};
use crate::model::{finite, ContractSpec, ModelParams, RiskPrefs};
use crate::pricing::b_of_tau;
use crate::quad::adaptive_simpson;

/// Smallest maturity separation accepted by the pair strategy (years).
pub const MIN_MATURITY_GAP: f64 = 1e-6;
/// Absolute tolerance of the single-contract value integral.
pub const PHI_SINGLE_TOL: f64 = 1e-12;
pub const PHI_SINGLE_MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutput {
    pub t: f64,
    /// Signed contract counts, one per traded contract.
    pub positions: Vec<f64>,
    /// `positions[i] * F_i`.
    pub cash_exposures: Vec<f64>,
    /// Drift / volatility inputs per contract.
    pub components: Vec<FuturesDynamics>,
    /// Instantaneous correlation of the pair (two-contract strategies only).
    pub rho12: Option<f64>,
}

fn check_price(f: f64) -> Result<()> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositivePrice(f))
    }
}

/// Optimal single-contract position `mu_1 / (gamma F_1 sigma_1^2)`.
pub fn single_position(
    t: f64,
    f1: f64,
    contract: ContractSpec,
    params: &ModelParams,
    prefs: &RiskPrefs,
) -> Result<StrategyOutput> {
    check_price(f1)?;
    prefs.check_time(t)?;
    let dynamics = FuturesDynamics::new(t, contract, params)?;
    let cash = dynamics.mu_i / (prefs.gamma * dynamics.sigma_i * dynamics.sigma_i);
    Ok(StrategyOutput {
        t,
        positions: vec![cash / f1],
        cash_exposures: vec![cash],
        components: vec![dynamics],
        rho12: None,
    })
}

fn pair_inputs(
    t: f64,
    f1: f64,
    f2: f64,
    c1: ContractSpec,
    c2: ContractSpec,
    params: &ModelParams,
    prefs: &RiskPrefs,
) -> Result<(FuturesDynamics, FuturesDynamics, f64)> {
    check_price(f1)?;
    check_price(f2)?;
    prefs.check_time(t)?;
    if (c1.maturity - c2.maturity).abs() < MIN_MATURITY_GAP {
        return Err(Error::MaturityCollision { t1: c1.maturity, t2: c2.maturity });
    }
    let d1 = FuturesDynamics::new(t, c1, params)?;
    let d2 = FuturesDynamics::new(t, c2, params)?;
    let rho12 = correlation_of_b(d1.b, d2.b, params);
    Ok((d1, d2, rho12))
}

/// Optimal two-contract positions, fully expanded in the model parameters.
///
/// This form has no `1 - rho12^2` denominator, so it stays accurate when
/// the maturities are close and the contracts nearly perfectly correlated.
pub fn pair_position(
    t: f64,
    f1: f64,
    f2: f64,
    c1: ContractSpec,
    c2: ContractSpec,
    params: &ModelParams,
    prefs: &RiskPrefs,
) -> Result<StrategyOutput> {
    let (d1, d2, rho12) = pair_inputs(t, f1, f2, c1, c2, params, prefs)?;
    let [cash1, cash2] = pair_cash_expanded(t, c1.maturity, c2.maturity, params, prefs.gamma);

    #[cfg(debug_assertions)]
    if 1.0 - rho12 * rho12 > 1e-4 {
        let [r1, r2] = pair_cash_rho_form(&d1, &d2, rho12, prefs.gamma);
        debug_assert!(
            (r1 - cash1).abs() <= 1e-8 * cash1.abs().max(1.0) && (r2 - cash2).abs() <= 1e-8 * cash2.abs().max(1.0),
            "expanded and correlation forms disagree: ({cash1}, {cash2}) vs ({r1}, {r2})"
        );
    }

    Ok(StrategyOutput {
        t,
        positions: vec![cash1 / f1, cash2 / f2],
        cash_exposures: vec![cash1, cash2],
        components: vec![d1, d2],
        rho12: Some(rho12),
    })
}

/// The same positions through the drift / volatility / correlation form
/// `(mu_1/sigma_1 - rho12 mu_2/sigma_2) / (gamma (1 - rho12^2) sigma_1 F_1)`.
pub fn pair_position_rho_form(
    t: f64,
    f1: f64,
    f2: f64,
    c1: ContractSpec,
    c2: ContractSpec,
    params: &ModelParams,
    prefs: &RiskPrefs,
) -> Result<StrategyOutput> {
    let (d1, d2, rho12) = pair_inputs(t, f1, f2, c1, c2, params, prefs)?;
    let [cash1, cash2] = pair_cash_rho_form(&d1, &d2, rho12, prefs.gamma);
    Ok(StrategyOutput {
        t,
        positions: vec![cash1 / f1, cash2 / f2],
        cash_exposures: vec![cash1, cash2],
        components: vec![d1, d2],
        rho12: Some(rho12),
    })
}

/// Cash exposures of the correlation form from arbitrary drift / volatility /
/// correlation inputs.
pub fn pair_cash_rho_form(d1: &FuturesDynamics, d2: &FuturesDynamics, rho12: f64, gamma: f64) -> [f64; 2] {
    let denom = gamma * (1.0 - rho12 * rho12);
    let s1 = d1.sharpe();
    let s2 = d2.sharpe();
    [(s1 - rho12 * s2) / (denom * d1.sigma_i), (s2 - rho12 * s1) / (denom * d2.sigma_i)]
}

/// Expanded closed form with the exponentials rescaled by `exp(-kappa T_j)`
/// so nothing overflows for long maturities.
fn pair_cash_expanded(t: f64, t1: f64, t2: f64, params: &ModelParams, gamma: f64) -> [f64; 2] {
    let ModelParams { mu, kappa, eta, eta_bar, rho, lambda, r, .. } = *params;
    let decay1 = libm::exp(-kappa * (t1 - t));
    let decay2 = libm::exp(-kappa * (t2 - t));
    // exp(-kappa (T2 - t)) - exp(-kappa (T1 - t))
    let gap = decay1 * libm::expm1(-kappa * (t2 - t1));
    let scale = gamma * (1.0 - rho * rho) * eta_bar * eta_bar * eta * eta;

    let eb2 = eta_bar * eta_bar;
    let cross = rho * eta_bar * eta;
    let tail = kappa * lambda * eta * eta;
    let base = r * kappa - lambda - kappa * mu;

    let n1 = libm::expm1(-kappa * (t2 - t)) * (r - mu) * eb2 + (decay2 * lambda + base) * cross + tail;
    let n2 = libm::expm1(-kappa * (t1 - t)) * (r - mu) * eb2 + (decay1 * lambda + base) * cross + tail;
    [-n1 / (gap * scale), n2 / (gap * scale)]
}

/// Integrand `mu_1(t)^2 / (2 sigma_1(t)^2)`, i.e. `-d(phi_single)/dt`.
pub fn phi_single_rate(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<f64> {
    let d = FuturesDynamics::new(t, contract, params)?;
    Ok(0.5 * d.sharpe() * d.sharpe())
}

/// Single-contract value exponent: integral of `mu_1^2 / (2 sigma_1^2)` over
/// `[t, horizon]`, by adaptive Simpson quadrature.
pub fn phi_single(t: f64, contract: ContractSpec, params: &ModelParams, prefs: &RiskPrefs) -> Result<f64> {
    prefs.check_time(t)?;
    contract.time_to_maturity(prefs.horizon)?;
    let maturity = contract.maturity;
    let p = *params;
    let rate = move |s: f64| {
        let b = b_of_tau(maturity - s, p.kappa);
        let mu = crate::dynamics::drift_of_b(b, &p);
        0.5 * mu * mu / covariance_coeff(b, b, &p)
    };
    Ok(adaptive_simpson(rate, t, prefs.horizon, PHI_SINGLE_TOL, PHI_SINGLE_MAX_DEPTH).value)
}

/// Squared maximal Sharpe ratio of the two-factor market:
/// `((r-mu)^2 eta_bar^2 + 2 lambda (r-mu) rho eta_bar eta + lambda^2 eta^2) / ((1-rho^2) eta_bar^2 eta^2)`.
pub fn pair_sharpe_squared(params: &ModelParams) -> f64 {
    let ModelParams { mu, eta, eta_bar, rho, lambda, r, .. } = *params;
    let excess = r - mu;
    let numerator = excess * excess * eta_bar * eta_bar
        + 2.0 * lambda * excess * rho * eta_bar * eta
        + lambda * lambda * eta * eta;
    numerator / ((1.0 - rho * rho) * eta_bar * eta_bar * eta * eta)
}

/// Two-contract value exponent `(T - t) S / 2` with `S` from
/// [`pair_sharpe_squared`]. Depends on neither the maturities, `kappa` nor `alpha`.
pub fn phi_pair(t: f64, params: &ModelParams, prefs: &RiskPrefs) -> Result<f64> {
    prefs.check_time(t)?;
    Ok((prefs.horizon - t) * pair_sharpe_squared(params) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValueReport {
    pub phi: f64,
    /// `-exp(-gamma w - phi)`.
    pub value: f64,
    /// `w + phi / gamma`.
    pub certainty_equivalent: f64,
}

pub fn value_and_ce(w: f64, phi: f64, prefs: &RiskPrefs) -> ValueReport {
    ValueReport {
        phi,
        value: -libm::exp(-prefs.gamma * w - phi),
        certainty_equivalent: w + phi / prefs.gamma,
    }
}

/// Drift and volatility of optimal two-contract wealth, which is an
/// arithmetic Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WealthMoments {
    pub mu_w: f64,
    pub sigma_w: f64,
}

pub fn wealth_moments(params: &ModelParams, prefs: &RiskPrefs) -> WealthMoments {
    let mu_w = pair_sharpe_squared(params) / prefs.gamma;
    WealthMoments { mu_w, sigma_w: libm::sqrt(mu_w / prefs.gamma) }
}

/// First-order-condition matrix of the three-contract problem and its
/// degeneracy diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityReport {
    pub matrix: [[f64; 3]; 3],
    pub determinant: f64,
    /// Determinant over the product of the diagonal entries.
    pub scaled_determinant: f64,
    /// Singular values, largest first.
    pub singular_values: [f64; 3],
    /// Number of singular values above `1e-10` times the largest.
    pub rank: usize,
    /// Leading 2x2 minor over the product of its diagonal entries
    /// (`1 - rho12^2` of the first two contracts).
    pub scaled_leading_minor: f64,
}

pub const RANK_CUTOFF: f64 = 1e-10;

/// Builds the 3x3 matrix `M_ij = F_i F_j a_ij`, with
/// `a_ij = eta^2 + eta_bar^2 B_i B_j + rho eta eta_bar (B_i + B_j)`.
///
/// Two risk factors drive all three contracts, so the matrix is always rank
/// deficient.
pub fn three_futures_singularity(
    t: f64,
    prices: [f64; 3],
    contracts: [ContractSpec; 3],
    params: &ModelParams,
) -> Result<SingularityReport> {
    finite("t", t)?;
    let mut b = [0.0; 3];
    for i in 0..3 {
        check_price(prices[i])?;
        b[i] = b_of_tau(contracts[i].time_to_maturity(t)?, params.kappa);
    }
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = prices[i] * prices[j] * covariance_coeff(b[i], b[j], params);
        }
    }
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let determinant = mat.determinant();
    let diag = m[0][0] * m[1][1] * m[2][2];

    let mut sv = [0.0; 3];
    sv.copy_from_slice(mat.singular_values().as_slice());
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank = sv.iter().filter(|&&s| s > RANK_CUTOFF * sv[0]).count();

    let minor = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Ok(SingularityReport {
        matrix: m,
        determinant,
        scaled_determinant: determinant / diag,
        singular_values: sv,
        rank,
        scaled_leading_minor: minor / (m[0][0] * m[1][1]),
    })
}
