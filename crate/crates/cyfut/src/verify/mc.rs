//! Monte Carlo expected utility and wealth moments of the optimal strategies
//! against the closed forms, on one shared set of physical-measure paths.

use cyfut_core::dynamics::{CashSchedule, Measure, PathSimulator, SimConfig};
use cyfut_core::pricing::futures_price;
use cyfut_core::strategy::{phi_pair, phi_single, value_and_ce, wealth_moments};
use cyfut_core::{ContractSpec, MarketState, ModelParams, RiskPrefs};
use serde::Serialize;

use super::{guard, CheckResult};
use crate::error::Result;
use crate::sim::{simulate_terminals, SampleStats};

#[derive(Debug, Clone, Serialize)]
pub struct McOptions {
    pub n_paths: usize,
    pub steps_per_year: f64,
    pub seed: u64,
    pub spot: f64,
    pub delta0: f64,
    /// Standard errors allowed between estimate and closed form.
    pub n_se: f64,
    /// Scale applied to the pair controls for the optimality-gap check.
    pub suboptimal_scale: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            steps_per_year: 500.0,
            seed: 42,
            spot: 100.0,
            delta0: 0.0,
            n_se: 3.0,
            suboptimal_scale: 0.5,
        }
    }
}

struct Strategy {
    name: &'static str,
    gamma: f64,
    schedule: CashSchedule,
    /// Closed-form value exponent at t = 0.
    phi: f64,
}

/// Wealth starts at 0, so the closed-form value is `-exp(-phi)`.
pub fn run_mc_checks(p: &ModelParams, prefs: &RiskPrefs, contracts: &[ContractSpec], opts: &McOptions, workers: usize) -> Vec<CheckResult> {
    guard("mc", || mc_checks(p, prefs, contracts, opts, workers))
}

fn mc_checks(p: &ModelParams, prefs: &RiskPrefs, contracts: &[ContractSpec], opts: &McOptions, workers: usize) -> Result<Vec<CheckResult>> {
    let [c1, c2] = *contracts else {
        return Ok(vec![CheckResult::errored("mc", "Monte Carlo checks need exactly two contracts")]);
    };
    let init = MarketState::new(0.0, opts.spot.ln(), opts.delta0)?;
    let cfg = SimConfig::with_steps_per_year(opts.n_paths, opts.steps_per_year, opts.seed, Measure::Physical, prefs.horizon);
    let sim = PathSimulator::new(p, init, &cfg, contracts)?;
    let times = sim.times().to_vec();
    let doubled = RiskPrefs { gamma: 2.0 * prefs.gamma, ..*prefs };

    let pair = CashSchedule::pair(&times, c1, c2, p, prefs)?;
    let strategies = [
        Strategy { name: "single[1]", gamma: prefs.gamma, schedule: CashSchedule::single(&times, 0, c1, p, prefs)?, phi: phi_single(0.0, c1, p, prefs)? },
        Strategy { name: "single[2]", gamma: prefs.gamma, schedule: CashSchedule::single(&times, 1, c2, p, prefs)?, phi: phi_single(0.0, c2, p, prefs)? },
        Strategy { name: "pair", gamma: prefs.gamma, schedule: pair.clone(), phi: phi_pair(0.0, p, prefs)? },
        Strategy { name: "pair_scaled", gamma: prefs.gamma, schedule: pair.scaled(opts.suboptimal_scale), phi: phi_pair(0.0, p, prefs)? },
        Strategy { name: "gamma_x2.pair", gamma: doubled.gamma, schedule: CashSchedule::pair(&times, c1, c2, p, &doubled)?, phi: phi_pair(0.0, p, &doubled)? },
        Strategy { name: "gamma_x2.single[1]", gamma: doubled.gamma, schedule: CashSchedule::single(&times, 0, c1, p, &doubled)?, phi: phi_single(0.0, c1, p, &doubled)? },
    ];
    let sim = sim.with_wealth(0.0, strategies.iter().map(|s| s.schedule.clone()).collect())?;
    let terminals = simulate_terminals(&sim, workers)?;
    let paths = format!("{} paths, {} steps", cfg.n_paths, cfg.n_steps);
    let k = opts.n_se;

    let mut out = Vec::new();
    for (j, s) in strategies.iter().enumerate() {
        let utility = SampleStats::of(&terminals.iter().map(|t| -(-s.gamma * t.wealth[j]).exp()).collect::<Vec<_>>());
        let gain = SampleStats::of(&terminals.iter().map(|t| t.wealth[j]).collect::<Vec<_>>());
        let value = value_and_ce(0.0, s.phi, &RiskPrefs { gamma: s.gamma, ..*prefs }).value;
        if s.name == "pair_scaled" {
            out.push(CheckResult::below(
                "mc.pair_scaled.utility_gap",
                utility.mean,
                value,
                k * utility.mean_std_error,
                format!(
                    "pair controls x{}: MC mean utility must fall below the optimal value by more than {k} SE \
                     (SE {:.3e}, z {:.2}); {paths}",
                    opts.suboptimal_scale,
                    utility.mean_std_error,
                    utility.z_mean(value)
                ),
            ));
            continue;
        }
        out.push(CheckResult::comparison(
            format!("mc.{}.utility", s.name),
            utility.mean,
            value,
            k * utility.mean_std_error,
            format!("mean of -exp(-gamma W_T) vs -exp(-phi(0)); z {:.2}; {paths}", utility.z_mean(value)),
        ));
        // terminal gain is Gaussian with mean 2 phi/gamma and variance 2 phi/gamma^2
        let (mean, var) = (2.0 * s.phi / s.gamma, 2.0 * s.phi / (s.gamma * s.gamma));
        let label = if s.name.ends_with("pair") { "mu_W T" } else { "2 phi/gamma" };
        out.push(CheckResult::comparison(
            format!("mc.{}.wealth_mean", s.name),
            gain.mean,
            mean,
            k * gain.mean_std_error,
            format!("mean of W_T vs {label}; z {:.2}", gain.z_mean(mean)),
        ));
        out.push(CheckResult::comparison(
            format!("mc.{}.wealth_variance", s.name),
            gain.variance,
            var,
            k * gain.variance_std_error,
            format!("variance of W_T vs closed form; z {:.2}", gain.z_variance(var)),
        ));
        if s.name == "pair" {
            let m = wealth_moments(p, prefs);
            let t = prefs.horizon;
            out.push(CheckResult::residual(
                "mc.pair.moments_consistency",
                ((m.mu_w * t - mean).abs() / mean.abs().max(f64::MIN_POSITIVE))
                    .max((m.sigma_w * m.sigma_w * t - var).abs() / var.abs().max(f64::MIN_POSITIVE)),
                1e-13,
                "mu_W T and sigma_W^2 T against 2 phi/gamma and 2 phi/gamma^2",
            ));
        }
    }

    // futures are Q-martingales; exact transitions need only a few steps
    let q_cfg = SimConfig::new(opts.n_paths, 12, opts.seed ^ 0x51, Measure::RiskNeutral, prefs.horizon);
    let q_sim = PathSimulator::new(p, init, &q_cfg, contracts)?;
    let q_terminals = simulate_terminals(&q_sim, workers)?;
    for (i, &c) in contracts.iter().enumerate() {
        let f0 = futures_price(init, c, p)?;
        let stats = SampleStats::of(&q_terminals.iter().map(|t| t.futures[i]).collect::<Vec<_>>());
        out.push(CheckResult::comparison(
            format!("mc.q_martingale[{}]", i + 1),
            stats.mean,
            f0,
            k * stats.mean_std_error,
            format!("risk-neutral mean of F_{}(T) vs F_{}(0); z {:.2}", i + 1, i + 1, stats.z_mean(f0)),
        ));
    }
    Ok(out)
}
