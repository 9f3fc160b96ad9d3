//! Dual-formula consistency, algebraic identities and the three-contract
//! singularity.

use cyfut_core::dynamics::{corr_rho12, FuturesDynamics};
use cyfut_core::quad::adaptive_simpson;
use cyfut_core::strategy::{
    pair_position, pair_position_rho_form, phi_pair, phi_single, three_futures_singularity, wealth_moments,
};
use cyfut_core::{ContractSpec, ModelParams, RiskPrefs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{guard, CheckResult};
use crate::config::Resolved;
use crate::error::Result;

/// Random admissible parameter set.
pub(crate) fn draw_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        mu: rng.random_range(-0.1..0.1),
        kappa: rng.random_range(0.1..3.0),
        alpha: rng.random_range(-0.2..0.2),
        eta: rng.random_range(0.1..0.9),
        eta_bar: rng.random_range(0.1..0.9),
        rho: rng.random_range(-0.9..0.9),
        lambda: rng.random_range(-0.3..0.3),
        r: rng.random_range(0.0..0.08),
    }
}

/// Smallest `1 - rho12^2` at which the correlation form is compared: it
/// loses about `eps / (1 - rho12^2)` relative accuracy on its own.
pub const DUAL_MIN_DECORRELATION: f64 = 1e-4;

type PairCase = (ModelParams, RiskPrefs, ContractSpec, ContractSpec, f64, f64, f64);

fn draw_pair_case(rng: &mut ChaCha8Rng) -> Result<PairCase> {
    let p = draw_params(rng);
    let t1 = rng.random_range(0.2..3.0);
    let t2 = t1 + rng.random_range(1.0 / 12.0..2.0);
    let prefs = RiskPrefs { gamma: rng.random_range(0.001..1.0), horizon: t1 };
    let t = rng.random_range(0.0..t1);
    let f1 = rng.random_range(20.0..200.0);
    let f2 = rng.random_range(20.0..200.0);
    Ok((p, prefs, ContractSpec::new(t1)?, ContractSpec::new(t2)?, t, f1, f2))
}

/// Expanded pair positions against the correlation form at the configured
/// point and `n` random admissible inputs, plus the backward error of the
/// expanded form in the 2x2 first-order conditions.
pub fn dual_formula_checks(r: &Resolved, n: usize, seed: u64) -> Vec<CheckResult> {
    guard("dual_formula", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6475_616c);
        let mut worst: f64 = 0.0;
        let mut worst_at = String::new();
        let mut cases = vec![(r.params, r.prefs, r.c1, r.c2, 0.0, 100.0, 100.0)];
        let mut resampled = 0usize;
        while cases.len() <= n {
            let case = draw_pair_case(&mut rng)?;
            let r12 = corr_rho12(case.4, case.2, case.3, &case.0)?;
            if 1.0 - r12 * r12 < DUAL_MIN_DECORRELATION {
                resampled += 1;
                continue;
            }
            cases.push(case);
        }
        for &(p, prefs, c1, c2, t, f1, f2) in &cases {
            let a = pair_position(t, f1, f2, c1, c2, &p, &prefs)?;
            let b = pair_position_rho_form(t, f1, f2, c1, c2, &p, &prefs)?;
            let scale = a.positions[0].abs().max(a.positions[1].abs());
            for i in 0..2 {
                let d = (a.positions[i] - b.positions[i]).abs() / scale;
                if d > worst {
                    worst = d;
                    worst_at = format!("worst at t={t:.4} T1={:.4} T2={:.4} rho12={:?}", c1.maturity, c2.maturity, a.rho12);
                }
            }
        }

        // unrestricted draws: Sigma c = m / gamma with Sigma the covariance rates
        let mut backward: f64 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_726d);
        for _ in 0..n {
            let (p, prefs, c1, c2, t, f1, f2) = draw_pair_case(&mut rng)?;
            let s = pair_position(t, f1, f2, c1, c2, &p, &prefs)?;
            let (d1, d2) = (FuturesDynamics::new(t, c1, &p)?, FuturesDynamics::new(t, c2, &p)?);
            let cov = cyfut_core::dynamics::covariance_coeff(d1.b, d2.b, &p);
            let c = &s.cash_exposures;
            let rows = [
                (d1.sigma_i * d1.sigma_i * c[0], cov * c[1], d1.mu_i / prefs.gamma),
                (cov * c[0], d2.sigma_i * d2.sigma_i * c[1], d2.mu_i / prefs.gamma),
            ];
            for (x, y, rhs) in rows {
                backward = backward.max((x + y - rhs).abs() / (x.abs() + y.abs() + rhs.abs()));
            }
        }
        Ok(vec![
            CheckResult::residual(
                "dual_formula.pair_positions",
                worst,
                1e-10,
                format!(
                    "max relative gap, expanded vs correlation form, {} inputs with 1 - rho12^2 >= {DUAL_MIN_DECORRELATION:e} \
                     ({resampled} draws resampled); {worst_at}",
                    cases.len()
                ),
            ),
            CheckResult::residual(
                "dual_formula.first_order_conditions",
                backward,
                1e-12,
                format!("max relative backward error of the expanded cash exposures in Sigma c = m / gamma, {n} unrestricted inputs"),
            ),
        ])
    })
}

/// Pair value exponent by quadrature of `(m' Sigma^-1 m) / 2`, built from the
/// contract drifts, volatilities and correlation.
pub fn phi_pair_by_quadrature(t: f64, p: &ModelParams, prefs: &RiskPrefs, c1: ContractSpec, c2: ContractSpec) -> Result<f64> {
    // evaluate once to surface domain errors before integrating
    FuturesDynamics::new(prefs.horizon, c1, p)?;
    FuturesDynamics::new(prefs.horizon, c2, p)?;
    let rate = |s: f64| {
        let d1 = FuturesDynamics::new(s, c1, p).expect("checked domain");
        let d2 = FuturesDynamics::new(s, c2, p).expect("checked domain");
        let r12 = corr_rho12(s, c1, c2, p).expect("checked domain");
        let (m1, m2, s1, s2) = (d1.mu_i, d2.mu_i, d1.sigma_i, d2.sigma_i);
        let num = m1 * m1 * s2 * s2 - 2.0 * r12 * m1 * m2 * s1 * s2 + m2 * m2 * s1 * s1;
        0.5 * num / (s1 * s1 * s2 * s2 * (1.0 - r12 * r12))
    };
    Ok(adaptive_simpson(rate, t, prefs.horizon, 1e-13, 40).value)
}

pub fn identity_checks(r: &Resolved, draws: usize, seed: u64) -> Vec<CheckResult> {
    guard("identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6964_656e);
        let mut cases = vec![(r.params, r.prefs)];
        for _ in 0..draws {
            let p = draw_params(&mut rng);
            let prefs = RiskPrefs { gamma: rng.random_range(0.001..1.0), horizon: rng.random_range(0.1..3.0) };
            cases.push((p, prefs));
        }
        let (mut sigma_gap, mut phi_gap): (f64, f64) = (0.0, 0.0);
        for (p, prefs) in &cases {
            let m = wealth_moments(p, prefs);
            let target = m.mu_w / prefs.gamma;
            sigma_gap = sigma_gap.max((m.sigma_w * m.sigma_w - target).abs() / target.abs().max(f64::MIN_POSITIVE));
            for k in 0..5 {
                let t = prefs.horizon * k as f64 / 5.0;
                let phi = phi_pair(t, p, prefs)?;
                let id = prefs.gamma * m.mu_w * (prefs.horizon - t) / 2.0;
                phi_gap = phi_gap.max((phi - id).abs() / phi.abs().max(f64::MIN_POSITIVE));
            }
        }

        // alpha must not move phi, the wealth moments or the single-contract exponent at all
        let mut alpha_gap: f64 = 0.0;
        let base = r.params;
        let reference = (
            phi_pair(0.0, &base, &r.prefs)?,
            wealth_moments(&base, &r.prefs),
            phi_single(0.0, r.c1, &base, &r.prefs)?,
        );
        for alpha in [-0.1, 0.0, 0.1] {
            let p = ModelParams { alpha, ..base };
            let m = wealth_moments(&p, &r.prefs);
            for (a, b) in [
                (phi_pair(0.0, &p, &r.prefs)?, reference.0),
                (m.mu_w, reference.1.mu_w),
                (m.sigma_w, reference.1.sigma_w),
                (phi_single(0.0, r.c1, &p, &r.prefs)?, reference.2),
            ] {
                alpha_gap = alpha_gap.max((a - b).abs());
            }
        }

        // kappa: the closed form ignores it; the quadrature built from the
        // kappa-dependent contract dynamics must agree
        let closed = phi_pair(0.0, &base, &r.prefs)?;
        let mut kappa_spread: f64 = 0.0;
        let mut quad_gap: f64 = 0.0;
        let mut moments_spread: f64 = 0.0;
        let m0 = wealth_moments(&base, &r.prefs);
        for kappa in [0.4, 0.8, 1.6] {
            let p = ModelParams { kappa, ..base };
            let q = phi_pair_by_quadrature(0.0, &p, &r.prefs, r.c1, r.c2)?;
            kappa_spread = kappa_spread.max((phi_pair(0.0, &p, &r.prefs)? - closed).abs()).max((q - closed).abs());
            quad_gap = quad_gap.max((q - closed).abs());
            let m = wealth_moments(&p, &r.prefs);
            moments_spread = moments_spread.max((m.mu_w - m0.mu_w).abs()).max((m.sigma_w - m0.sigma_w).abs());
        }
        let q = phi_pair_by_quadrature(0.0, &base, &r.prefs, r.c1, r.c2)?;
        quad_gap = quad_gap.max((q - closed).abs());

        Ok(vec![
            CheckResult::residual(
                "identity.sigma_w_squared",
                sigma_gap,
                4.0 * f64::EPSILON,
                format!("max relative |sigma_W^2 - mu_W/gamma|, {} parameter sets", cases.len()),
            ),
            CheckResult::residual(
                "identity.phi_gamma_mu_w",
                phi_gap,
                1e-14,
                format!("max relative |phi(t) - gamma mu_W (T - t)/2|, {} parameter sets x 5 times", cases.len()),
            ),
            CheckResult::residual(
                "identity.alpha_independence",
                alpha_gap,
                0.0,
                "phi, mu_W, sigma_W and the single-contract exponent at alpha in {-0.1, 0, 0.1}; must be bit-identical",
            ),
            CheckResult::residual(
                "identity.kappa_independence",
                kappa_spread.max(moments_spread),
                1e-12,
                "spread of phi (closed form and quadrature) and wealth moments across kappa in {0.4, 0.8, 1.6}",
            ),
            CheckResult::residual(
                "identity.phi_pair_quadrature",
                quad_gap,
                1e-10,
                "quadrature of the per-contract Sharpe form vs the closed form",
            ),
        ])
    })
}

/// Three-contract first-order-condition matrix at `n` random inputs.
pub fn singularity_checks(n: usize, seed: u64) -> Vec<CheckResult> {
    guard("singularity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7369_6e67);
        let (mut det, mut min_minor) = (0.0f64, f64::INFINITY);
        let mut ranks = Vec::with_capacity(n);
        for _ in 0..n {
            let p = draw_params(&mut rng);
            let mut m = [rng.random_range(0.1..3.0), 0.0, 0.0];
            m[1] = m[0] + rng.random_range(0.05..1.0);
            m[2] = m[1] + rng.random_range(0.05..1.0);
            let t = rng.random_range(0.0..m[0]);
            let f = [rng.random_range(20.0..200.0), rng.random_range(20.0..200.0), rng.random_range(20.0..200.0)];
            let c = [ContractSpec::new(m[0])?, ContractSpec::new(m[1])?, ContractSpec::new(m[2])?];
            let rep = three_futures_singularity(t, f, c, &p)?;
            det = det.max(rep.scaled_determinant.abs());
            min_minor = min_minor.min(rep.scaled_leading_minor);
            ranks.push(rep.rank);
        }
        let p = ModelParams::reference();
        let c = ContractSpec::new(1.5)?;
        let dup = three_futures_singularity(0.2, [90.0, 100.0, 110.0], [c, ContractSpec::new(2.0)?, c], &p)?;
        let bad_rank = ranks.iter().filter(|&&r| r != 2).count();
        Ok(vec![
            CheckResult::residual(
                "singularity.scaled_determinant",
                det,
                1e-10,
                format!("max |det| / prod(diagonal) over {n} random inputs"),
            ),
            CheckResult::residual(
                "singularity.rank_two",
                bad_rank as f64,
                0.0,
                format!("inputs whose numerical rank (singular-value cutoff 1e-10) is not 2, out of {n}"),
            ),
            CheckResult::exceeds(
                "singularity.leading_minor",
                min_minor,
                0.0,
                "min scaled 2x2 leading minor (1 - rho12^2); nonzero for distinct maturities",
            ),
            CheckResult::residual(
                "singularity.duplicate_maturity_rank",
                dup.rank as f64,
                2.0,
                "rank with two identical maturities among three",
            ),
        ])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn suite_parts_pass_on_reference() {
        let r = Config::default().resolve(None).unwrap();
        for c in dual_formula_checks(&r, 100, 7)
            .into_iter()
            .chain(identity_checks(&r, 20, 7))
            .chain(singularity_checks(100, 7))
        {
            assert!(c.passed(), "{c:#?}");
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let r = Config::default().resolve(None).unwrap();
        let q = phi_pair_by_quadrature(0.0, &r.params, &r.prefs, r.c1, r.c2).unwrap();
        assert!((q - 0.008_457_142_857_1).abs() < 1e-12, "{q}");
    }
}
