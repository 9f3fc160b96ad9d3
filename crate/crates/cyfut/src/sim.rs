//! Parallel Monte Carlo driver and the `simulate` command.
//!
//! Paths are distributed over a rayon pool, but each path draws from its
//! own `(seed, path)` substream and results are collected in path order, so
//! every output is identical for any worker count.

use cyfut_core::dynamics::{optimal_schedule, Measure, PathSet, PathSimulator, PathTerminal, SimConfig};
use cyfut_core::pricing::futures_price;
use cyfut_core::strategy::{phi_pair, phi_single, value_and_ce, wealth_moments};
use cyfut_core::{ContractSpec, MarketState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigEcho, Resolved};
use crate::error::{Error, Result};
use crate::output::{csv_buffer, finish_csv, fmt_f64};

pub const DEFAULT_STEPS_PER_YEAR: f64 = 500.0;
/// Default cap on recorded grid points (`n_paths * (n_steps + 1)`).
pub const DEFAULT_MAX_POINTS: usize = 10_000_000;

/// Runs `f` on a pool with `workers` threads (0 = rayon's default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}

/// Every path, recorded on the full grid.
pub fn simulate_paths(sim: &PathSimulator, workers: usize) -> Result<PathSet> {
    let paths = with_workers(workers, || (0..sim.n_paths()).into_par_iter().map(|p| sim.record(p)).collect())?;
    Ok(PathSet::assemble(sim.times().to_vec(), sim.n_contracts(), paths))
}

/// Terminal values only; memory is O(n_paths).
pub fn simulate_terminals(sim: &PathSimulator, workers: usize) -> Result<Vec<PathTerminal>> {
    with_workers(workers, || (0..sim.n_paths()).into_par_iter().map(|p| sim.run(p, |_| {})).collect())
}

/// Long-format CSV: `path,step,t,x,delta,F1[,F2][,wealth]`.
pub fn paths_csv(set: &PathSet) -> Result<Vec<u8>> {
    let mut w = csv_buffer();
    let mut header = vec!["path".to_owned(), "step".into(), "t".into(), "x".into(), "delta".into()];
    header.extend((1..=set.futures_paths.len()).map(|i| format!("F{i}")));
    if set.wealth_paths.is_some() {
        header.push("wealth".into());
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for path in 0..set.n_paths() {
        for (step, &t) in set.times.iter().enumerate() {
            row.clear();
            row.push(path.to_string());
            row.push(step.to_string());
            row.push(fmt_f64(t));
            row.push(fmt_f64(set.x_paths.get(path, step)));
            row.push(fmt_f64(set.delta_paths.get(path, step)));
            for f in &set.futures_paths {
                row.push(fmt_f64(f.get(path, step)));
            }
            if let Some(wealth) = &set.wealth_paths {
                row.push(fmt_f64(wealth.get(path, step)));
            }
            w.write_record(&row)?;
        }
    }
    finish_csv(w)
}

/// Sample mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    /// `sqrt((m4 - s^4) / n)` from the sample fourth central moment.
    pub variance_std_error: f64,
}

impl SampleStats {
    /// Sequential two-pass moments; the summation order is fixed.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let d = (x - mean) * (x - mean);
            m2 += d;
            m4 += d * d;
        }
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let m2n = m2 / nf;
        let m4n = m4 / nf;
        Self {
            n,
            mean,
            variance,
            mean_std_error: (variance / nf).sqrt(),
            variance_std_error: ((m4n - m2n * m2n).max(0.0) / nf).sqrt(),
        }
    }

    /// `(observed - target) / SE`.
    pub fn z_mean(&self, target: f64) -> f64 {
        (self.mean - target) / self.mean_std_error
    }

    pub fn z_variance(&self, target: f64) -> f64 {
        (self.variance - target) / self.variance_std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Traded {
    Pair,
    Single1,
    Single2,
}

impl Traded {
    pub fn contracts(self, r: &Resolved) -> Vec<ContractSpec> {
        match self {
            Traded::Pair => vec![r.c1, r.c2],
            Traded::Single1 => vec![r.c1],
            Traded::Single2 => vec![r.c2],
        }
    }

    /// Value exponent at `t = 0`.
    pub fn phi0(self, r: &Resolved) -> Result<f64> {
        Ok(match self {
            Traded::Pair => phi_pair(0.0, &r.params, &r.prefs)?,
            Traded::Single1 => phi_single(0.0, r.c1, &r.params, &r.prefs)?,
            Traded::Single2 => phi_single(0.0, r.c2, &r.params, &r.prefs)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub n_paths: usize,
    /// Overrides `steps_per_year` when set.
    pub n_steps: Option<usize>,
    pub steps_per_year: f64,
    pub seed: u64,
    pub measure: Measure,
    pub workers: usize,
    pub traded: Traded,
    pub spot: f64,
    pub delta0: f64,
    pub w0: f64,
    pub max_points: usize,
    pub record_paths: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            n_steps: None,
            steps_per_year: DEFAULT_STEPS_PER_YEAR,
            seed: 42,
            measure: Measure::Physical,
            workers: 0,
            traded: Traded::Pair,
            spot: 100.0,
            delta0: 0.0,
            w0: 0.0,
            max_points: DEFAULT_MAX_POINTS,
            record_paths: true,
        }
    }
}

impl SimulateOptions {
    pub fn sim_config(&self, horizon: f64) -> SimConfig {
        match self.n_steps {
            Some(n) => SimConfig::new(self.n_paths, n, self.seed, self.measure, horizon),
            None => SimConfig::with_steps_per_year(self.n_paths, self.steps_per_year, self.seed, self.measure, horizon),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSettings {
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub measure: Measure,
    pub traded: Traded,
    pub spot: f64,
    pub delta0: f64,
    pub w0: f64,
    pub initial_futures: Vec<f64>,
}

/// Terminal wealth against its closed-form moments and utility.
#[derive(Debug, Clone, Serialize)]
pub struct WealthSummary {
    pub phi0: f64,
    /// `2 phi0 / gamma`; equals `mu_W T` for the pair.
    pub analytic_gain_mean: f64,
    /// `2 phi0 / gamma^2`; equals `sigma_W^2 T` for the pair.
    pub analytic_gain_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_w: Option<f64>,
    pub gain: SampleStats,
    pub gain_mean_z: f64,
    pub gain_variance_z: f64,
    pub analytic_value: f64,
    pub utility: SampleStats,
    pub utility_z: f64,
    pub within_3se: bool,
}

/// Futures prices should be Q-martingales.
#[derive(Debug, Clone, Serialize)]
pub struct MartingaleSummary {
    pub contract: usize,
    pub initial: f64,
    pub terminal: SampleStats,
    pub z: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    pub config: ConfigEcho,
    pub simulation: SimSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wealth: Option<WealthSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub martingale: Vec<MartingaleSummary>,
}

pub struct SimulateOutput {
    pub paths_csv: Option<Vec<u8>>,
    pub summary: SimSummary,
}

/// Simulates over `[0, horizon]`. Under P the traded strategy's wealth is
/// tracked; under Q both contracts are checked for the martingale property.
pub fn cmd_simulate(r: &Resolved, opts: &SimulateOptions) -> Result<SimulateOutput> {
    let cfg = opts.sim_config(r.prefs.horizon);
    cfg.validate(0.0)?;
    let points = cfg.n_paths.saturating_mul(cfg.n_steps + 1);
    if opts.record_paths && points > opts.max_points {
        return Err(Error::Simulation(format!(
            "{} paths x {} grid points = {points} exceeds the cap of {}; \
             lower the path or step count, raise --max-points, or pass --no-paths",
            cfg.n_paths,
            cfg.n_steps + 1,
            opts.max_points
        )));
    }
    if !(opts.spot.is_finite() && opts.spot > 0.0) {
        return Err(Error::Simulation(format!("spot must be positive (got {})", opts.spot)));
    }
    let init = MarketState::new(0.0, opts.spot.ln(), opts.delta0)?;
    let contracts = match cfg.measure {
        Measure::Physical => opts.traded.contracts(r),
        Measure::RiskNeutral => vec![r.c1, r.c2],
    };
    let initial_futures =
        contracts.iter().map(|&c| futures_price(init, c, &r.params)).collect::<Result<Vec<_>, _>>()?;
    let mut sim = PathSimulator::new(&r.params, init, &cfg, &contracts)?;
    if cfg.measure == Measure::Physical {
        let schedule = optimal_schedule(sim.times(), &contracts, &r.params, &r.prefs)?;
        sim = sim.with_wealth(opts.w0, vec![schedule])?;
    }

    let terminals = simulate_terminals(&sim, opts.workers)?;
    let (wealth, martingale) = match cfg.measure {
        Measure::Physical => (Some(wealth_summary(r, opts, &terminals)?), Vec::new()),
        Measure::RiskNeutral => {
            let m = initial_futures
                .iter()
                .enumerate()
                .map(|(i, &f0)| {
                    let xs: Vec<f64> = terminals.iter().map(|p| p.futures[i]).collect();
                    let stats = SampleStats::of(&xs);
                    let z = stats.z_mean(f0);
                    MartingaleSummary { contract: i + 1, initial: f0, terminal: stats, z, within_3se: z.abs() <= 3.0 }
                })
                .collect();
            (None, m)
        }
    };
    let paths_csv = if opts.record_paths { Some(paths_csv(&simulate_paths(&sim, opts.workers)?)?) } else { None };

    Ok(SimulateOutput {
        paths_csv,
        summary: SimSummary {
            config: r.echo(),
            simulation: SimSettings {
                n_paths: cfg.n_paths,
                n_steps: cfg.n_steps,
                dt: cfg.dt(0.0),
                seed: cfg.seed,
                measure: cfg.measure,
                traded: opts.traded,
                spot: opts.spot,
                delta0: opts.delta0,
                w0: opts.w0,
                initial_futures,
            },
            wealth,
            martingale,
        },
    })
}

fn wealth_summary(r: &Resolved, opts: &SimulateOptions, terminals: &[PathTerminal]) -> Result<WealthSummary> {
    let gamma = r.prefs.gamma;
    let phi0 = opts.traded.phi0(r)?;
    let gains: Vec<f64> = terminals.iter().map(|p| p.wealth[0] - opts.w0).collect();
    let utilities: Vec<f64> = terminals.iter().map(|p| -(-gamma * p.wealth[0]).exp()).collect();
    let gain = SampleStats::of(&gains);
    let utility = SampleStats::of(&utilities);
    let analytic_gain_mean = 2.0 * phi0 / gamma;
    let analytic_gain_variance = 2.0 * phi0 / (gamma * gamma);
    let analytic_value = value_and_ce(opts.w0, phi0, &r.prefs).value;
    let (mu_w, sigma_w) = match opts.traded {
        Traded::Pair => {
            let m = wealth_moments(&r.params, &r.prefs);
            (Some(m.mu_w), Some(m.sigma_w))
        }
        _ => (None, None),
    };
    let gain_mean_z = gain.z_mean(analytic_gain_mean);
    let gain_variance_z = gain.z_variance(analytic_gain_variance);
    let utility_z = utility.z_mean(analytic_value);
    Ok(WealthSummary {
        phi0,
        analytic_gain_mean,
        analytic_gain_variance,
        mu_w,
        sigma_w,
        gain,
        gain_mean_z,
        gain_variance_z,
        analytic_value,
        utility,
        utility_z,
        within_3se: gain_mean_z.abs() <= 3.0 && gain_variance_z.abs() <= 3.0 && utility_z.abs() <= 3.0,
    })
}
