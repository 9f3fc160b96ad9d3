//! Coefficient ODEs and the pricing PDE.

use cyfut_core::pricing::{a_of_tau, b_of_tau, pde_residual_of};
use cyfut_core::{ContractSpec, MarketState, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{guard, CheckResult};

/// Which `A` coefficient the ODE and PDE checks are run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffsUnderTest {
    ClosedForm,
    /// `A + 0.01 tau`; every check that depends on `A` must fail.
    CorruptedA,
}

impl CoeffsUnderTest {
    fn a(self, tau: f64, p: &ModelParams) -> f64 {
        match self {
            CoeffsUnderTest::ClosedForm => a_of_tau(tau, p),
            CoeffsUnderTest::CorruptedA => a_of_tau(tau, p) + 0.01 * tau,
        }
    }
}

const RK4_MAX_STEP: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;

/// RK4 integration of the coefficient ODEs in time to maturity,
/// `dB/dtau = -(1 + kappa B)`,
/// `dA/dtau = r + eta_bar^2 B^2 / 2 + B (alpha_tilde kappa + rho eta eta_bar)`,
/// from `A = B = 0` at `tau = 0`. `taus` must be nondecreasing and >= 0.
/// Returns `(A, B)` at each entry.
pub fn rk4_coefficients(p: &ModelParams, taus: &[f64]) -> Vec<(f64, f64)> {
    let drift = p.alpha_tilde() * p.kappa + p.rho * p.eta * p.eta_bar;
    let f = |_tau: f64, (_a, b): (f64, f64)| -> (f64, f64) {
        (p.r + 0.5 * p.eta_bar * p.eta_bar * b * b + b * drift, -(1.0 + p.kappa * b))
    };
    let mut out = Vec::with_capacity(taus.len());
    let (mut tau, mut y) = (0.0, (0.0, 0.0));
    for &target in taus {
        let span = target - tau;
        let n = (span / RK4_MAX_STEP).ceil().max(0.0) as usize;
        for i in 0..n {
            let h = span / n as f64;
            let s = tau + h * i as f64;
            let k1 = f(s, y);
            let k2 = f(s + h / 2.0, (y.0 + h / 2.0 * k1.0, y.1 + h / 2.0 * k1.1));
            let k3 = f(s + h / 2.0, (y.0 + h / 2.0 * k2.0, y.1 + h / 2.0 * k2.1));
            let k4 = f(s + h, (y.0 + h * k3.0, y.1 + h * k3.1));
            y.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        tau = target;
        out.push(y);
    }
    out
}

/// Derivative in `t` of `g(t)`: central, or second-order backward at maturity.
fn d_dt(g: impl Fn(f64) -> f64, t: f64, maturity: f64) -> f64 {
    let h = FD_STEP;
    if t + h > maturity {
        (3.0 * g(t) - 4.0 * g(t - h) + g(t - 2.0 * h)) / (2.0 * h)
    } else {
        (g(t + h) - g(t - h)) / (2.0 * h)
    }
}

/// Closed form vs RK4 on `grid` times in `[0, T_i]`, plus finite-difference
/// residuals of both ODEs and a corrupted-`kappa` negative control.
pub fn run_ode_checks(p: &ModelParams, contract: ContractSpec, grid: usize, coeffs: CoeffsUnderTest) -> Vec<CheckResult> {
    let m = contract.maturity;
    let tag = format!("T={m:.6}");
    guard(&format!("ode[{tag}]"), || {
        let grid = grid.max(2);
        let times: Vec<f64> = (0..grid).map(|k| if k + 1 == grid { m } else { m * k as f64 / (grid - 1) as f64 }).collect();
        let taus: Vec<f64> = times.iter().rev().map(|&t| m - t).collect();
        let oracle = rk4_coefficients(p, &taus);

        let mut rk4_diff: f64 = 0.0;
        let mut control_diff: f64 = 0.0;
        let wrong = ModelParams { kappa: p.kappa * 1.05, ..*p };
        for (&tau, &(a, b)) in taus.iter().zip(&oracle) {
            rk4_diff = rk4_diff.max((coeffs.a(tau, p) - a).abs()).max((b_of_tau(tau, p.kappa) - b).abs());
            control_diff = control_diff
                .max((coeffs.a(tau, &wrong) - a).abs())
                .max((b_of_tau(tau, wrong.kappa) - b).abs());
        }

        let a_t = |t: f64| coeffs.a(m - t, p);
        let b_t = |t: f64| b_of_tau(m - t, p.kappa);
        let drift = p.alpha_tilde() * p.kappa + p.rho * p.eta * p.eta_bar;
        let printed_drift = p.alpha * p.kappa + p.rho * p.eta * p.eta_bar;
        let (mut res_a, mut res_b, mut res_printed): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for &t in &times {
            let b = b_t(t);
            let da = d_dt(a_t, t, m);
            let db = d_dt(b_t, t, m);
            res_b = res_b.max((db - 1.0 - p.kappa * b).abs());
            res_a = res_a.max((p.r + 0.5 * p.eta_bar * p.eta_bar * b * b + b * drift + da).abs());
            res_printed = res_printed.max((p.r + 0.5 * p.eta_bar * b * b + b * printed_drift + da).abs());
        }
        Ok(vec![
            CheckResult::residual(
                format!("ode.rk4_vs_closed_form[{tag}]"),
                rk4_diff,
                1e-8,
                format!("max |closed form - RK4| over A and B on {grid} times, RK4 step <= {RK4_MAX_STEP}"),
            ),
            CheckResult::residual(
                format!("ode.b_residual[{tag}]"),
                res_b,
                1e-6,
                format!("B' - 1 - kappa B by finite differences (h = {FD_STEP}), one-sided at maturity"),
            ),
            CheckResult::residual(
                format!("ode.a_residual[{tag}]"),
                res_a,
                1e-6,
                "r + eta_bar^2 B^2/2 + B (alpha_tilde kappa + rho eta eta_bar) + A'",
            ),
            CheckResult::exceeds(
                format!("ode.printed_a_form_rejected[{tag}]"),
                res_printed,
                1e-6,
                "residual of the A equation written with eta_bar/2 and alpha in place of eta_bar^2/2 and \
                 alpha_tilde; the closed form does not satisfy it",
            ),
            CheckResult::exceeds(
                format!("ode.negative_control.kappa[{tag}]"),
                control_diff,
                1e-8,
                "closed form evaluated with kappa * 1.05 against the RK4 oracle at the true kappa",
            ),
        ])
    })
}

/// Pricing-PDE residuals at `n_points` random interior points, spread over
/// `contracts`, plus a bump-convergence check and a corrupted-`A` control.
pub fn run_pde_checks(
    p: &ModelParams,
    contracts: &[ContractSpec],
    n_points: usize,
    bump: f64,
    seed: u64,
    coeffs: CoeffsUnderTest,
) -> Vec<CheckResult> {
    guard("pde", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7064_6500);
        let mut points = Vec::with_capacity(n_points);
        for k in 0..n_points {
            let c = contracts[k % contracts.len()];
            let t = rng.random_range(0.0..c.maturity * (1.0 - 1e-3));
            let x = rng.random_range(20f64.ln()..200f64.ln());
            let delta = rng.random_range(-0.3..0.3);
            points.push((c, MarketState::new(t, x, delta)?));
        }
        let log_price = |c: ContractSpec, shift: f64| {
            move |t: f64, x: f64, d: f64| {
                let tau = c.maturity - t;
                x + coeffs.a(tau, p) + shift * tau + b_of_tau(tau, p.kappa) * d
            }
        };
        let mut worst: f64 = 0.0;
        let mut control: f64 = f64::INFINITY;
        let (mut coarse, mut fine) = (0.0, 0.0);
        for (k, &(c, s)) in points.iter().enumerate() {
            worst = worst.max(pde_residual_of(log_price(c, 0.0), s, p, bump)?);
            control = control.min(pde_residual_of(log_price(c, 0.01), s, p, bump)?);
            if k < 20 {
                coarse += pde_residual_of(log_price(c, 0.0), s, p, 1e-3)?;
                fine += pde_residual_of(log_price(c, 0.0), s, p, 1e-4)?;
            }
        }
        Ok(vec![
            CheckResult::residual(
                "pde.residual",
                worst,
                1e-6,
                format!("max |PDE(F)|/F over {n_points} random interior points, central differences, bump {bump}"),
            ),
            CheckResult::exceeds(
                "pde.bump_convergence",
                coarse / fine,
                30.0,
                "summed residual at bump 1e-3 over bump 1e-4 on 20 points (second order gives ~100)",
            ),
            CheckResult::exceeds(
                "pde.negative_control.a_shift",
                control,
                1e-3,
                "min residual with A + 0.01 (T - t); a constant shift of A cancels from the scaled PDE",
            ),
        ])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_closed_form() {
        let p = ModelParams::reference();
        let taus = [0.0, 0.5, 1.0, 13.0 / 12.0];
        for (&tau, &(a, b)) in taus.iter().zip(&rk4_coefficients(&p, &taus)) {
            assert!((a - a_of_tau(tau, &p)).abs() < 1e-12);
            assert!((b - b_of_tau(tau, p.kappa)).abs() < 1e-12);
        }
    }

    #[test]
    fn checks_pass_and_controls_fire() {
        let p = ModelParams::reference();
        let c = ContractSpec::new(13.0 / 12.0).unwrap();
        let good = run_ode_checks(&p, c, 1000, CoeffsUnderTest::ClosedForm);
        assert!(good.iter().all(|r| r.passed()), "{good:#?}");
        let bad = run_ode_checks(&p, c, 1000, CoeffsUnderTest::CorruptedA);
        assert!(bad.iter().any(|r| !r.passed()));
        let pde = run_pde_checks(&p, &[c], 50, 1e-4, 1, CoeffsUnderTest::ClosedForm);
        assert!(pde.iter().all(|r| r.passed()), "{pde:#?}");
        let pde = run_pde_checks(&p, &[c], 50, 1e-4, 1, CoeffsUnderTest::CorruptedA);
        assert!(!pde[0].passed());
    }
}
