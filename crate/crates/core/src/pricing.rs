//! Exponential-affine futures prices `F = exp(x + A(t) + B(t) delta)`.
//!
//! `A` and `B` are evaluated in closed form. The coefficient ODEs they solve
//! are
//!
//! ```text
//! B'(t) - kappa B(t) - 1 = 0
//! r + (eta_bar^2 / 2) B(t)^2 + B(t) (alpha_tilde kappa + rho eta eta_bar) + A'(t) = 0
//! ```
//!
//! with `A(T_i) = B(T_i) = 0`. Integrating them numerically is left to the
//! verification code.

use crate::error::{Error, Result};
use crate::model::{finite, ContractSpec, MarketState, ModelParams};

/// Affine coefficients of one contract at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineCoeffs {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub maturity: f64,
}

impl AffineCoeffs {
    pub fn new(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<Self> {
        let tau = contract.time_to_maturity(t)?;
        Ok(Self {
            a: a_of_tau(tau, params),
            b: b_of_tau(tau, params.kappa),
            t,
            maturity: contract.maturity,
        })
    }

    pub fn log_price(&self, x: f64, delta: f64) -> f64 {
        x + self.a + self.b * delta
    }
}

/// `B` as a function of time to maturity: `-(1 - exp(-kappa tau)) / kappa`.
#[inline]
pub fn b_of_tau(tau: f64, kappa: f64) -> f64 {
    libm::expm1(-kappa * tau) / kappa
}

/// `A` as a function of time to maturity.
pub fn a_of_tau(tau: f64, params: &ModelParams) -> f64 {
    let ModelParams { kappa, eta, eta_bar, rho, r, .. } = *params;
    let alpha_tilde = params.alpha_tilde();
    let one_minus_e1 = -libm::expm1(-kappa * tau);
    let one_minus_e2 = -libm::expm1(-2.0 * kappa * tau);
    let eb2 = eta_bar * eta_bar;
    let k2 = kappa * kappa;

    (r - alpha_tilde + eb2 / (2.0 * k2) - eta * eta_bar * rho / kappa) * tau
        + eb2 / 4.0 * one_minus_e2 / (k2 * kappa)
        + (alpha_tilde * kappa + eta * eta_bar * rho - eb2 / kappa) * one_minus_e1 / k2
}

pub fn b_coeff(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<f64> {
    let tau = contract.time_to_maturity(t)?;
    Ok(b_of_tau(tau, params.kappa))
}

pub fn a_coeff(t: f64, contract: ContractSpec, params: &ModelParams) -> Result<f64> {
    let tau = contract.time_to_maturity(t)?;
    Ok(a_of_tau(tau, params))
}

pub fn log_futures_price(
    state: MarketState,
    contract: ContractSpec,
    params: &ModelParams,
) -> Result<f64> {
    Ok(AffineCoeffs::new(state.t, contract, params)?.log_price(state.x, state.delta))
}

/// Futures price of `contract` in `state`. Equals `exp(x)` at maturity.
pub fn futures_price(state: MarketState, contract: ContractSpec, params: &ModelParams) -> Result<f64> {
    Ok(libm::exp(log_futures_price(state, contract, params)?))
}

/// Scaled residual `|PDE(F)| / F` of the risk-neutral pricing PDE, with every
/// partial derivative taken by central differences.
///
/// `bump` is relative for `x` and `delta` (scaled by `max(1, |v|)`); the time
/// step is fixed at `1e-6`.
pub fn pde_residual(
    state: MarketState,
    contract: ContractSpec,
    params: &ModelParams,
    bump: f64,
) -> Result<f64> {
    let tau = contract.time_to_maturity(state.t)?;
    if tau <= 0.0 {
        return Err(Error::PastMaturity { t: state.t, maturity: contract.maturity });
    }
    let maturity = contract.maturity;
    let p = *params;
    let log_price =
        move |t: f64, x: f64, d: f64| x + a_of_tau(maturity - t, &p) + b_of_tau(maturity - t, p.kappa) * d;
    pde_residual_of(log_price, state, params, bump)
}

/// PDE residual of an arbitrary log-price function `(t, x, delta) -> log F`.
///
/// Differences are taken on `F / F0 - 1 = expm1(log F - log F0)`, which keeps
/// the second differences free of the `eps / h^2` cancellation a direct
/// evaluation of `F` would suffer.
pub fn pde_residual_of<L>(log_price: L, state: MarketState, params: &ModelParams, bump: f64) -> Result<f64>
where
    L: Fn(f64, f64, f64) -> f64,
{
    finite("bump", bump)?;
    if bump <= 0.0 {
        return Err(Error::NonPositive { name: "bump", value: bump });
    }
    let MarketState { t, x, delta } = state;
    let base = log_price(t, x, delta);
    let g = |t: f64, x: f64, d: f64| libm::expm1(log_price(t, x, d) - base);

    let hx = exact_step(x, bump * x.abs().max(1.0));
    let hd = exact_step(delta, bump * delta.abs().max(1.0));
    let ht = exact_step(t, 1e-6);

    let gx_p = g(t, x + hx, delta);
    let gx_m = g(t, x - hx, delta);
    let gd_p = g(t, x, delta + hd);
    let gd_m = g(t, x, delta - hd);

    let f_x = (gx_p - gx_m) / (2.0 * hx);
    let f_xx = (gx_p + gx_m) / (hx * hx);
    let f_d = (gd_p - gd_m) / (2.0 * hd);
    let f_dd = (gd_p + gd_m) / (hd * hd);
    let f_xd = (g(t, x + hx, delta + hd) - g(t, x + hx, delta - hd) - g(t, x - hx, delta + hd)
        + g(t, x - hx, delta - hd))
        / (4.0 * hx * hd);
    let f_t = (g(t + ht, x, delta) - g(t - ht, x, delta)) / (2.0 * ht);

    let ModelParams { eta, eta_bar, rho, kappa, r, .. } = *params;
    let residual = 0.5 * eta * eta * f_xx
        + rho * eta * eta_bar * f_xd
        + 0.5 * eta_bar * eta_bar * f_dd
        + (r - delta - 0.5 * eta * eta) * f_x
        + kappa * (params.alpha_tilde() - delta) * f_d
        + f_t;
    Ok(residual.abs())
}

/// Adjusts `h` so that `v + h` and `v - h` are exactly `h` away from `v`.
fn exact_step(v: f64, h: f64) -> f64 {
    (v + h) - v
}
