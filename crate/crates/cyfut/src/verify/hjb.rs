//! HJB residuals of the candidate value functions and controls, with
//! analytic partial derivatives.
//!
//! With `u = -exp(-gamma w - phi(t))`: `u_t = -phi' u`, `u_w = -gamma u`,
//! `u_ww = gamma^2 u`, and every derivative in the futures prices vanishes.

use cyfut_core::dynamics::{corr_rho12, FuturesDynamics};
use cyfut_core::strategy::{pair_cash_rho_form, pair_position, pair_sharpe_squared, phi_pair, phi_single, phi_single_rate, single_position};
use cyfut_core::{ContractSpec, ModelParams, RiskPrefs};
use serde::Serialize;

use super::{guard, CheckResult};

#[derive(Debug, Clone, Serialize)]
pub struct HjbGrid {
    pub n_t: usize,
    pub n_f: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    pub wealth: Vec<f64>,
    /// Relative control perturbation for the optimality check.
    pub perturbation: f64,
}

impl Default for HjbGrid {
    fn default() -> Self {
        Self { n_t: 50, n_f: 50, f_lo: 20.0, f_hi: 200.0, wealth: vec![-100.0, 0.0, 100.0], perturbation: 0.01 }
    }
}

impl HjbGrid {
    fn times(&self, horizon: f64) -> Vec<f64> {
        lin(0.0, horizon, self.n_t)
    }

    fn prices(&self) -> Vec<f64> {
        lin(self.f_lo, self.f_hi, self.n_f)
    }
}

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

/// One market's worth of inputs at a node.
struct Node<'a> {
    u: f64,
    phi_dot: f64,
    gamma: f64,
    mu: &'a [f64],
    sigma: &'a [f64],
    f: &'a [f64],
    rho12: f64,
}

impl Node<'_> {
    /// `u_t + sum pi_i mu_i F_i u_w + 1/2 (pi' Sigma pi) u_ww`.
    fn bracket(&self, pi: &[f64]) -> f64 {
        let u = self.u;
        let (u_t, u_w, u_ww) = (-self.phi_dot * u, -self.gamma * u, self.gamma * self.gamma * u);
        let mut lin = 0.0;
        let mut quad = 0.0;
        for (i, &p) in pi.iter().enumerate() {
            let e = p * self.f[i];
            lin += e * self.mu[i];
            quad += e * e * self.sigma[i] * self.sigma[i];
        }
        if pi.len() == 2 {
            quad += 2.0 * self.rho12 * pi[0] * pi[1] * self.sigma[0] * self.sigma[1] * self.f[0] * self.f[1];
        }
        u_t + lin * u_w + 0.5 * quad * u_ww
    }

    /// Largest scaled change of the bracket when one control moves by
    /// `+-eps` relative. Negative means every perturbation made it worse.
    fn worst_perturbation(&self, pi: &[f64], eps: f64) -> f64 {
        let base = self.bracket(pi);
        let mut worst = f64::NEG_INFINITY;
        for i in 0..pi.len() {
            for s in [1.0 + eps, 1.0 - eps] {
                let mut q = pi.to_vec();
                q[i] *= s;
                worst = worst.max((self.bracket(&q) - base) / self.u.abs());
            }
        }
        worst
    }
}

pub fn run_hjb_checks(p: &ModelParams, prefs: &RiskPrefs, contracts: &[ContractSpec], grid: &HjbGrid) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (i, &c) in contracts.iter().enumerate() {
        out.extend(guard(&format!("hjb.single[{}]", i + 1), || single_checks(p, prefs, c, i + 1, grid)));
    }
    if let [c1, c2] = *contracts {
        out.extend(guard("hjb.pair", || pair_checks(p, prefs, c1, c2, grid)));
        out.extend(guard("hjb.reduction", || reduction_check(p, prefs, c1, c2, grid)));
    }
    out
}

fn single_checks(p: &ModelParams, prefs: &RiskPrefs, c: ContractSpec, idx: usize, grid: &HjbGrid) -> crate::error::Result<Vec<CheckResult>> {
    let (mut residual, mut perturb): (f64, f64) = (0.0, f64::NEG_INFINITY);
    let mut nodes = 0usize;
    for t in grid.times(prefs.horizon) {
        let phi = phi_single(t, c, p, prefs)?;
        let phi_dot = -phi_single_rate(t, c, p)?;
        let d = FuturesDynamics::new(t, c, p)?;
        for f in grid.prices() {
            let pi = single_position(t, f, c, p, prefs)?.positions[0];
            for &w in &grid.wealth {
                let node = Node {
                    u: -(-prefs.gamma * w - phi).exp(),
                    phi_dot,
                    gamma: prefs.gamma,
                    mu: &[d.mu_i],
                    sigma: &[d.sigma_i],
                    f: &[f],
                    rho12: 0.0,
                };
                residual = residual.max(node.bracket(&[pi]).abs() / node.u.abs());
                perturb = perturb.max(node.worst_perturbation(&[pi], grid.perturbation));
                nodes += 1;
            }
        }
    }
    Ok(vec![
        CheckResult::residual(
            format!("hjb.single[{idx}].residual"),
            residual,
            1e-8,
            format!("max |HJB|/|u| over {nodes} (t, F, w) nodes; phi' from the value integrand"),
        ),
        CheckResult::below(
            format!("hjb.single[{idx}].perturbation"),
            perturb,
            0.0,
            0.0,
            format!("largest scaled bracket change under +-{}% control perturbations; must be < 0", grid.perturbation * 100.0),
        ),
    ])
}

fn pair_checks(p: &ModelParams, prefs: &RiskPrefs, c1: ContractSpec, c2: ContractSpec, grid: &HjbGrid) -> crate::error::Result<Vec<CheckResult>> {
    let phi_dot = -pair_sharpe_squared(p) / 2.0;
    let (mut residual, mut perturb): (f64, f64) = (0.0, f64::NEG_INFINITY);
    let mut nodes = 0usize;
    for t in grid.times(prefs.horizon) {
        let phi = phi_pair(t, p, prefs)?;
        let d1 = FuturesDynamics::new(t, c1, p)?;
        let d2 = FuturesDynamics::new(t, c2, p)?;
        let rho12 = corr_rho12(t, c1, c2, p)?;
        for f1 in grid.prices() {
            let f2 = grid.f_lo + grid.f_hi - f1;
            let s = pair_position(t, f1, f2, c1, c2, p, prefs)?;
            for &w in &grid.wealth {
                let node = Node {
                    u: -(-prefs.gamma * w - phi).exp(),
                    phi_dot,
                    gamma: prefs.gamma,
                    mu: &[d1.mu_i, d2.mu_i],
                    sigma: &[d1.sigma_i, d2.sigma_i],
                    f: &[f1, f2],
                    rho12,
                };
                residual = residual.max(node.bracket(&s.positions).abs() / node.u.abs());
                perturb = perturb.max(node.worst_perturbation(&s.positions, grid.perturbation));
                nodes += 1;
            }
        }
    }
    Ok(vec![
        CheckResult::residual(
            "hjb.pair.residual",
            residual,
            1e-8,
            format!("max |HJB|/|u| over {nodes} (t, F1, F2, w) nodes; closed-form phi, expanded positions"),
        ),
        CheckResult::below(
            "hjb.pair.perturbation",
            perturb,
            0.0,
            0.0,
            format!("largest scaled bracket change under +-{}% perturbation of either control; must be < 0", grid.perturbation * 100.0),
        ),
    ])
}

/// With the contract correlation forced to zero, the pair controls and HJB
/// residual split into two single-contract problems.
fn reduction_check(p: &ModelParams, prefs: &RiskPrefs, c1: ContractSpec, c2: ContractSpec, grid: &HjbGrid) -> crate::error::Result<Vec<CheckResult>> {
    let (mut control_gap, mut residual_gap): (f64, f64) = (0.0, 0.0);
    for t in grid.times(prefs.horizon) {
        let d = [FuturesDynamics::new(t, c1, p)?, FuturesDynamics::new(t, c2, p)?];
        let rates = [phi_single_rate(t, c1, p)?, phi_single_rate(t, c2, p)?];
        let cash = pair_cash_rho_form(&d[0], &d[1], 0.0, prefs.gamma);
        let single: Vec<f64> = d.iter().map(|d| d.mu_i / (prefs.gamma * d.sigma_i * d.sigma_i)).collect();
        for i in 0..2 {
            control_gap = control_gap.max((cash[i] - single[i]).abs() / single[i].abs().max(1e-300));
        }
        for f1 in grid.prices() {
            let f = [f1, grid.f_lo + grid.f_hi - f1];
            let pi = [cash[0] / f[0], cash[1] / f[1]];
            let node = |k: std::ops::Range<usize>, phi_dot: f64| {
                let n = Node {
                    u: -1.0,
                    phi_dot,
                    gamma: prefs.gamma,
                    mu: &[d[0].mu_i, d[1].mu_i][k.clone()],
                    sigma: &[d[0].sigma_i, d[1].sigma_i][k.clone()],
                    f: &f[k.clone()],
                    rho12: 0.0,
                };
                n.bracket(&pi[k])
            };
            let joint = node(0..2, -(rates[0] + rates[1]));
            let split = node(0..1, -rates[0]) + node(1..2, -rates[1]);
            residual_gap = residual_gap.max((joint - split).abs());
        }
    }
    Ok(vec![
        CheckResult::residual(
            "hjb.reduction.controls",
            control_gap,
            1e-12,
            "relative gap between pair controls at rho12 = 0 and mu_i/(gamma sigma_i^2)",
        ),
        CheckResult::residual(
            "hjb.reduction.residual",
            residual_gap,
            1e-12,
            "pair HJB residual at rho12 = 0 minus the sum of the single-contract residuals (u = -1)",
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_passes() {
        let p = ModelParams::reference();
        let prefs = RiskPrefs { gamma: 0.01, horizon: 1.0 };
        let cs = [ContractSpec::new(13.0 / 12.0).unwrap(), ContractSpec::new(14.0 / 12.0).unwrap()];
        let grid = HjbGrid { n_t: 10, n_f: 10, ..Default::default() };
        let r = run_hjb_checks(&p, &prefs, &cs, &grid);
        assert_eq!(r.len(), 8);
        assert!(r.iter().all(|c| c.passed()), "{r:#?}");
    }

    #[test]
    fn wrong_controls_leave_a_residual() {
        let phi_dot = -0.5 * 0.02 * 0.02 / 0.09;
        let node = Node { u: -1.0, phi_dot, gamma: 0.01, mu: &[0.02], sigma: &[0.3], f: &[100.0], rho12: 0.0 };
        let opt = 0.02 / (0.01 * 100.0 * 0.09);
        assert!(node.bracket(&[opt]).abs() < 1e-17);
        assert!(node.bracket(&[opt * 1.1]).abs() > 1e-5);
        assert!(node.worst_perturbation(&[opt], 0.01) < 0.0);
        assert!(node.worst_perturbation(&[opt * 1.5], 0.01) > 0.0);
    }
}
