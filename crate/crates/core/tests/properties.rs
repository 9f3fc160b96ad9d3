use cyfut_core::dynamics::{corr_rho12, vol_sigma};
use cyfut_core::pricing::{b_coeff, futures_price};
use cyfut_core::strategy::{pair_position, pair_position_rho_form, phi_pair, single_position, wealth_moments};
use cyfut_core::{ContractSpec, MarketState, ModelParams, RiskPrefs};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (
        -0.1..0.1f64,
        0.05..3.0f64,
        -0.2..0.2f64,
        0.05..0.9f64,
        0.05..0.9f64,
        -0.95..0.95f64,
        -0.3..0.3f64,
        0.0..0.08f64,
    )
        .prop_map(|(mu, kappa, alpha, eta, eta_bar, rho, lambda, r)| ModelParams {
            mu,
            kappa,
            alpha,
            eta,
            eta_bar,
            rho,
            lambda,
            r,
        })
}

proptest! {
    #[test]
    fn b_increases_toward_maturity(p in params(), m in 0.1..5.0f64, s in 0.0..1.0f64, u in 0.0..1.0f64) {
        let c = ContractSpec::new(m).unwrap();
        let (lo, hi) = if s < u { (s * m, u * m) } else { (u * m, s * m) };
        let b_lo = b_coeff(lo, c, &p).unwrap();
        let b_hi = b_coeff(hi, c, &p).unwrap();
        prop_assert!(b_lo <= b_hi);
        prop_assert!(b_lo <= 0.0 && b_lo >= -1.0 / p.kappa);
    }

    #[test]
    fn price_monotone_in_x_and_delta(p in params(), x in -2.0..6.0f64, d in -0.5..0.5f64, frac in 0.0..0.99f64) {
        let c = ContractSpec::new(2.0).unwrap();
        let t = 2.0 * frac;
        let f = |x, d| futures_price(MarketState::new(t, x, d).unwrap(), c, &p).unwrap();
        prop_assert!(f(x + 0.01, d) > f(x, d));
        prop_assert!(f(x, d + 0.01) < f(x, d));
    }

    #[test]
    fn volatility_positive(p in params(), m in 0.0..10.0f64, frac in 0.0..1.0f64) {
        let c = ContractSpec::new(m).unwrap();
        prop_assert!(vol_sigma(m * frac, c, &p).unwrap() > 0.0);
    }

    #[test]
    fn correlation_symmetric_and_bounded(p in params(), m1 in 0.1..5.0f64, m2 in 0.1..5.0f64, frac in 0.0..1.0f64) {
        let c1 = ContractSpec::new(m1).unwrap();
        let c2 = ContractSpec::new(m2).unwrap();
        let t = m1.min(m2) * frac;
        let r12 = corr_rho12(t, c1, c2, &p).unwrap();
        prop_assert!(r12 > -1.0 && r12 <= 1.0);
        prop_assert_eq!(r12, corr_rho12(t, c2, c1, &p).unwrap());
    }

    #[test]
    fn cash_exposures_ignore_prices(
        p in params(),
        gamma in 0.001..1.0f64,
        m1 in 0.5..3.0f64,
        gap in 0.05..1.0f64,
        frac in 0.0..1.0f64,
        f1 in 1.0..500.0f64,
        f2 in 1.0..500.0f64,
    ) {
        let c1 = ContractSpec::new(m1).unwrap();
        let c2 = ContractSpec::new(m1 + gap).unwrap();
        let prefs = RiskPrefs { gamma, horizon: m1 };
        let t = m1 * frac;
        let a = pair_position(t, f1, f2, c1, c2, &p, &prefs).unwrap();
        let b = pair_position(t, 100.0, 100.0, c1, c2, &p, &prefs).unwrap();
        for i in 0..2 {
            let scale = b.cash_exposures[i].abs().max(1e-300);
            prop_assert!((a.cash_exposures[i] - b.cash_exposures[i]).abs() <= 1e-12 * scale);
        }
        let s1 = single_position(t, f1, c1, &p, &prefs).unwrap();
        let s2 = single_position(t, f2, c1, &p, &prefs).unwrap();
        prop_assert!((s1.cash_exposures[0] - s2.cash_exposures[0]).abs() <= 1e-12 * s1.cash_exposures[0].abs());
    }

    #[test]
    fn pair_forms_agree(
        p in params(),
        gamma in 0.001..1.0f64,
        m1 in 0.2..3.0f64,
        gap in 0.08..2.0f64,
        frac in 0.0..1.0f64,
    ) {
        let c1 = ContractSpec::new(m1).unwrap();
        let c2 = ContractSpec::new(m1 + gap).unwrap();
        let prefs = RiskPrefs { gamma, horizon: m1 };
        let t = m1 * frac;
        let a = pair_position(t, 80.0, 90.0, c1, c2, &p, &prefs).unwrap();
        let b = pair_position_rho_form(t, 80.0, 90.0, c1, c2, &p, &prefs).unwrap();
        let r12 = a.rho12.unwrap();
        // the correlation form loses about eps / (1 - rho12^2) relative accuracy
        let tol = 1e-13 / (1.0 - r12 * r12);
        for i in 0..2 {
            let scale = a.positions[0].abs().max(a.positions[1].abs());
            prop_assert!((a.positions[i] - b.positions[i]).abs() <= tol * scale,
                "i={} {} vs {} (rho12={})", i, a.positions[i], b.positions[i], r12);
        }
    }

    #[test]
    fn phi_pair_equals_half_gamma_mu_w_tau(p in params(), gamma in 0.001..1.0f64, horizon in 0.1..3.0f64, frac in 0.0..1.0f64) {
        let prefs = RiskPrefs { gamma, horizon };
        let t = horizon * frac;
        let phi = phi_pair(t, &p, &prefs).unwrap();
        let m = wealth_moments(&p, &prefs);
        prop_assert!(phi >= 0.0);
        prop_assert!((phi - gamma * m.mu_w * (horizon - t) / 2.0).abs() <= 1e-14 * phi.max(1e-300));
        prop_assert!((m.sigma_w * m.sigma_w - m.mu_w / gamma).abs() <= 4.0 * f64::EPSILON * m.mu_w / gamma);
    }
}
