use cyfut_core::dynamics::{
    drift_mu, optimal_schedule, simulate_state, simulate_wealth, Measure, PathSimulator, SimConfig,
};
use cyfut_core::pricing::futures_price;
use cyfut_core::quad::adaptive_simpson;
use cyfut_core::strategy::single_position;
use cyfut_core::{ContractSpec, MarketState, ModelParams, RiskPrefs};

const T1: f64 = 13.0 / 12.0;
const T2: f64 = 14.0 / 12.0;

fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), var)
}

#[test]
fn risk_neutral_mean_of_terminal_spot_matches_futures_price() {
    // E^Q[exp(X_T)] over 10^6 paths against the closed-form price at t = 0.
    let p = ModelParams::reference();
    let c = ContractSpec::new(0.5).unwrap();
    let init = MarketState::new(0.0, 100f64.ln(), 0.05).unwrap();
    let cfg = SimConfig::new(1_000_000, 4, 11, Measure::RiskNeutral, 0.5);
    let sim = PathSimulator::new(&p, init, &cfg, &[]).unwrap();
    let (mean, se, _) = mean_and_se((0..cfg.n_paths).map(|i| sim.run(i, |_| {}).x.exp()));
    let price = futures_price(init, c, &p).unwrap();
    assert!((mean - price).abs() < 3.0 * se, "mc {mean} +- {se} vs {price}");
}

#[test]
fn futures_prices_are_q_martingales() {
    let p = ModelParams::reference();
    let c1 = ContractSpec::new(T1).unwrap();
    let init = MarketState::new(0.0, 100f64.ln(), 0.02).unwrap();
    let cfg = SimConfig::with_steps_per_year(100_000, 60.0, 3, Measure::RiskNeutral, T1);
    let sim = PathSimulator::new(&p, init, &cfg, &[c1]).unwrap();
    let (mean, se, _) = mean_and_se((0..cfg.n_paths).map(|i| sim.run(i, |_| {}).futures[0]));
    let price = futures_price(init, c1, &p).unwrap();
    assert!((mean - price).abs() < 3.0 * se, "mc {mean} +- {se} vs {price}");
}

#[test]
fn convenience_yield_matches_ou_moments_under_both_measures() {
    let p = ModelParams { alpha: 0.08, ..ModelParams::reference() };
    let init = MarketState::new(0.0, 4.0, -0.1).unwrap();
    let horizon = 1.5;
    for (measure, level) in [(Measure::Physical, p.alpha), (Measure::RiskNeutral, p.alpha_tilde())] {
        let cfg = SimConfig::new(100_000, 30, 5, measure, horizon);
        let sim = PathSimulator::new(&p, init, &cfg, &[]).unwrap();
        let (mean, se, var) = mean_and_se((0..cfg.n_paths).map(|i| sim.run(i, |_| {}).delta));
        let decay = (-p.kappa * horizon).exp();
        let expected_mean = level + (init.delta - level) * decay;
        let expected_var = p.eta_bar * p.eta_bar * (1.0 - decay * decay) / (2.0 * p.kappa);
        assert!((mean - expected_mean).abs() < 3.0 * se, "{measure:?}: {mean} vs {expected_mean}");
        // Gaussian sample variance has standard error var * sqrt(2 / (n - 1))
        let var_se = expected_var * (2.0 / (cfg.n_paths as f64 - 1.0)).sqrt();
        assert!((var - expected_var).abs() < 3.0 * var_se, "{measure:?}: {var} vs {expected_var}");
    }
}

#[test]
fn noise_free_paths_follow_the_ode_solution() {
    let p = ModelParams { eta: 0.0, eta_bar: 0.0, alpha: 0.04, ..ModelParams::reference() };
    let init = MarketState::new(0.0, 4.2, 0.1).unwrap();
    let mut cfg = SimConfig::new(2, 50, 9, Measure::Physical, 2.0);
    cfg.allow_zero_noise = true;
    let set = simulate_state(&p, init, &cfg, &[]).unwrap();
    for (k, &t) in set.times.iter().enumerate() {
        let decay = (-p.kappa * t).exp();
        let delta = p.alpha + (init.delta - p.alpha) * decay;
        let x = init.x + (p.mu - p.alpha) * t - (init.delta - p.alpha) * (1.0 - decay) / p.kappa;
        for path in 0..2 {
            assert!((set.delta_paths.get(path, k) - delta).abs() < 1e-13);
            assert!((set.x_paths.get(path, k) - x).abs() < 1e-12);
        }
    }
    cfg.allow_zero_noise = false;
    assert!(simulate_state(&p, init, &cfg, &[]).is_err());
}

#[test]
fn futures_paths_equal_pricing_map() {
    let p = ModelParams::reference();
    let cs = [ContractSpec::new(T1).unwrap(), ContractSpec::new(T2).unwrap()];
    let init = MarketState::new(0.0, 4.5, 0.03).unwrap();
    let cfg = SimConfig::new(5, 40, 1, Measure::Physical, 1.0);
    let set = simulate_state(&p, init, &cfg, &cs).unwrap();
    for path in 0..5 {
        for (k, &t) in set.times.iter().enumerate() {
            let s = MarketState::new(t, set.x_paths.get(path, k), set.delta_paths.get(path, k)).unwrap();
            for (i, c) in cs.iter().enumerate() {
                let f = futures_price(s, *c, &p).unwrap();
                assert!((set.futures_paths[i].get(path, k) - f).abs() <= 1e-12 * f);
            }
        }
    }
}

#[test]
fn no_premium_keeps_wealth_constant() {
    let p = ModelParams { mu: 0.001, lambda: 0.0, ..ModelParams::reference() };
    let prefs = RiskPrefs { gamma: 0.01, horizon: 1.0 };
    let cs = [ContractSpec::new(T1).unwrap(), ContractSpec::new(T2).unwrap()];
    let init = MarketState::new(0.0, 4.6, 0.0).unwrap();
    let cfg = SimConfig::new(20, 100, 2, Measure::Physical, 1.0);
    for contracts in [&cs[..1], &cs[..]] {
        let set = simulate_wealth(&p, &prefs, contracts, init, 10.0, &cfg).unwrap();
        let w = set.wealth_paths.unwrap();
        for path in 0..20 {
            assert!(w.row(path).iter().all(|&x| (x - 10.0).abs() < 1e-9));
        }
    }
}

#[test]
fn wealth_rejects_q_measure() {
    let p = ModelParams::reference();
    let prefs = RiskPrefs { gamma: 0.01, horizon: 1.0 };
    let c = [ContractSpec::new(T1).unwrap()];
    let init = MarketState::new(0.0, 4.6, 0.0).unwrap();
    let cfg = SimConfig::new(1, 10, 2, Measure::RiskNeutral, 1.0);
    assert!(simulate_wealth(&p, &prefs, &c, init, 0.0, &cfg).is_err());
}

#[test]
fn noise_free_wealth_matches_drift_integral() {
    // Strategy from the real parameters, paths from the noise-free limit.
    let p = ModelParams::reference();
    let quiet = ModelParams { eta: 0.0, eta_bar: 0.0, ..p };
    let prefs = RiskPrefs { gamma: 0.01, horizon: 1.0 };
    let c = ContractSpec::new(T1).unwrap();
    let init = MarketState::new(0.0, 100f64.ln(), 0.0).unwrap();
    let mut cfg = SimConfig::new(1, 20_000, 4, Measure::Physical, 1.0);
    cfg.allow_zero_noise = true;
    let sim = PathSimulator::new(&quiet, init, &cfg, &[c]).unwrap();
    let schedule = optimal_schedule(sim.times(), &[c], &p, &prefs).unwrap();
    let sim = sim.with_wealth(0.0, vec![schedule]).unwrap();
    let gain = sim.run(0, |_| {}).wealth[0];
    // int pi_1 mu_1 F_1 dt, with pi_1 F_1 independent of F_1
    let integrand = |t: f64| {
        single_position(t, 1.0, c, &p, &prefs).unwrap().cash_exposures[0] * drift_mu(t, c, &p).unwrap()
    };
    let expected = adaptive_simpson(integrand, 0.0, 1.0, 1e-12, 40).value;
    assert!((gain - expected).abs() < 1e-4 * expected.abs(), "{gain} vs {expected}");
}

#[test]
fn same_seed_same_paths() {
    let p = ModelParams::reference();
    let prefs = RiskPrefs { gamma: 0.01, horizon: 1.0 };
    let cs = [ContractSpec::new(T1).unwrap(), ContractSpec::new(T2).unwrap()];
    let init = MarketState::new(0.0, 4.6, 0.0).unwrap();
    let cfg = SimConfig::new(8, 25, 42, Measure::Physical, 1.0);
    let a = simulate_wealth(&p, &prefs, &cs, init, 0.0, &cfg).unwrap();
    let b = simulate_wealth(&p, &prefs, &cs, init, 0.0, &cfg).unwrap();
    assert_eq!(a, b);
    let c = simulate_wealth(&p, &prefs, &cs, init, 0.0, &SimConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a, c);
}
