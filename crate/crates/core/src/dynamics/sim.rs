use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ContractSpec, MarketState, ModelParams, RiskPrefs};
use crate::pricing::{a_of_tau, b_of_tau};
use crate::strategy::{pair_position, single_position};

/// At most this many contracts are carried along a simulated path.
pub const MAX_CONTRACTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Measure {
    /// Physical measure `P`: `X` drifts at `mu`, `delta` reverts to `alpha`.
    #[cfg_attr(feature = "serde", serde(rename = "p"))]
    Physical,
    /// Risk-neutral measure `Q`: `X` drifts at `r`, `delta` reverts to `alpha_tilde`.
    #[cfg_attr(feature = "serde", serde(rename = "q"))]
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub measure: Measure,
    /// Absolute end time of the grid; the grid starts at the initial state's `t`.
    pub horizon: f64,
    /// Accept `eta = eta_bar = 0` (noise-free limit).
    pub allow_zero_noise: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64, measure: Measure, horizon: f64) -> Self {
        Self { n_paths, n_steps, seed, measure, horizon, allow_zero_noise: false }
    }

    /// Grid with `ceil(horizon * steps_per_year)` steps (at least one).
    pub fn with_steps_per_year(
        n_paths: usize,
        steps_per_year: f64,
        seed: u64,
        measure: Measure,
        horizon: f64,
    ) -> Self {
        let n_steps = libm::ceil(horizon * steps_per_year).max(1.0) as usize;
        Self::new(n_paths, n_steps, seed, measure, horizon)
    }

    pub fn validate(&self, start: f64) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidSimConfig("n_paths must be at least 1"));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidSimConfig("n_steps must be at least 1"));
        }
        if !self.horizon.is_finite() || self.horizon <= start {
            return Err(Error::InvalidSimConfig("horizon must lie after the initial time"));
        }
        Ok(())
    }

    /// Grid times from `start` to `horizon`, both inclusive.
    pub fn times(&self, start: f64) -> Vec<f64> {
        let n = self.n_steps;
        let span = self.horizon - start;
        let mut times: Vec<f64> = (0..=n).map(|k| start + span * k as f64 / n as f64).collect();
        times[n] = self.horizon;
        times
    }

    pub fn dt(&self, start: f64) -> f64 {
        (self.horizon - start) / self.n_steps as f64
    }
}

/// Counter-based RNG for one path: ChaCha8 keyed by `seed`, stream = path index.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Exact Gaussian transition of `(X, delta)` over a fixed step `h`.
///
/// `delta` is an OU process; `X` picks up the time integral of `delta`, so
/// the pair is jointly Gaussian with a closed-form 2x2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactTransition {
    h: f64,
    decay: f64,
    one_minus_decay_over_kappa: f64,
    level: f64,
    x_drift: f64,
    l11: f64,
    l21: f64,
    l22: f64,
}

impl ExactTransition {
    pub fn new(params: &ModelParams, measure: Measure, h: f64) -> Self {
        let ModelParams { kappa, eta, eta_bar, rho, .. } = *params;
        let (level, x_rate) = match measure {
            Measure::Physical => (params.alpha, params.mu),
            Measure::RiskNeutral => (params.alpha_tilde(), params.r),
        };
        // E1 = int_0^h e^{-kappa v} dv, E2 = int_0^h e^{-2 kappa v} dv
        let e1 = -libm::expm1(-kappa * h) / kappa;
        let e2 = -libm::expm1(-2.0 * kappa * h) / (2.0 * kappa);
        let j1 = h - e1;
        let j2 = h - 2.0 * e1 + e2;

        let var_delta = eta_bar * eta_bar * e2;
        let var_x = eta * eta * h + eta_bar * eta_bar / (kappa * kappa) * j2
            - 2.0 * rho * eta * eta_bar / kappa * j1;
        let cov = rho * eta * eta_bar * e1 - eta_bar * eta_bar / kappa * (e1 - e2);

        let l11 = libm::sqrt(var_delta);
        let l21 = if l11 > 0.0 { cov / l11 } else { 0.0 };
        let l22 = libm::sqrt((var_x - l21 * l21).max(0.0));

        Self {
            h,
            decay: libm::exp(-kappa * h),
            one_minus_decay_over_kappa: e1,
            level,
            x_drift: (x_rate - 0.5 * eta * eta - level) * h,
            l11,
            l21,
            l22,
        }
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Advances `(x, delta)` by one step given two independent standard normals.
    #[inline]
    pub fn step(&self, x: f64, delta: f64, z1: f64, z2: f64) -> (f64, f64) {
        let dev = delta - self.level;
        let delta_next = self.level + dev * self.decay + self.l11 * z1;
        let x_next = x + self.x_drift - dev * self.one_minus_decay_over_kappa + self.l21 * z1 + self.l22 * z2;
        (x_next, delta_next)
    }
}

/// Cash exposure `pi_i * F_i` per contract slot at each grid step start.
#[derive(Debug, Clone, PartialEq)]
pub struct CashSchedule {
    cash: Vec<[f64; MAX_CONTRACTS]>,
}

impl CashSchedule {
    /// Single-contract strategy on `contract`, placed in contract slot `slot`.
    pub fn single(
        times: &[f64],
        slot: usize,
        contract: ContractSpec,
        params: &ModelParams,
        prefs: &RiskPrefs,
    ) -> Result<Self> {
        if slot >= MAX_CONTRACTS {
            return Err(Error::InvalidSimConfig("contract slot out of range"));
        }
        let cash = step_starts(times)
            .map(|t| {
                let out = single_position(t, 1.0, contract, params, prefs)?;
                let mut row = [0.0; MAX_CONTRACTS];
                row[slot] = out.cash_exposures[0];
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cash })
    }

    /// Two-contract strategy on contract slots 0 and 1.
    pub fn pair(
        times: &[f64],
        c1: ContractSpec,
        c2: ContractSpec,
        params: &ModelParams,
        prefs: &RiskPrefs,
    ) -> Result<Self> {
        let cash = step_starts(times)
            .map(|t| {
                let out = pair_position(t, 1.0, 1.0, c1, c2, params, prefs)?;
                Ok([out.cash_exposures[0], out.cash_exposures[1]])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cash })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            cash: self.cash.iter().map(|row| row.map(|c| c * factor)).collect(),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.cash.len()
    }

    pub fn exposure(&self, step: usize) -> [f64; MAX_CONTRACTS] {
        self.cash[step]
    }
}

fn step_starts(times: &[f64]) -> impl Iterator<Item = f64> + '_ {
    times[..times.len().saturating_sub(1)].iter().copied()
}

/// State at one grid point handed to path visitors.
#[derive(Debug, Clone, Copy)]
pub struct PointView<'a> {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub delta: f64,
    pub futures: &'a [f64],
    pub wealth: &'a [f64],
}

/// Final values of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTerminal {
    pub x: f64,
    pub delta: f64,
    pub futures: [f64; MAX_CONTRACTS],
    /// Terminal wealth per cash schedule, in schedule order.
    pub wealth: Vec<f64>,
}

/// Single-path simulation kernel shared by the sequential and parallel drivers.
///
/// Futures prices along the path come from the affine pricing map evaluated
/// at each grid point. Wealth is rebalanced at every grid point: the position
/// `cash / F` is held over the step and marked to the realized futures move.
/// No interest accrues on wealth.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    times: Vec<f64>,
    transition: ExactTransition,
    x0: f64,
    delta0: f64,
    seed: u64,
    n_paths: usize,
    measure: Measure,
    /// Per contract: (A, B) at each grid point.
    coeffs: Vec<Vec<(f64, f64)>>,
    w0: f64,
    schedules: Vec<CashSchedule>,
}

impl PathSimulator {
    pub fn new(
        params: &ModelParams,
        init: MarketState,
        cfg: &SimConfig,
        contracts: &[ContractSpec],
    ) -> Result<Self> {
        if cfg.allow_zero_noise {
            params.validate_allowing_zero_noise()?;
        } else {
            params.validate()?;
        }
        cfg.validate(init.t)?;
        if contracts.len() > MAX_CONTRACTS {
            return Err(Error::InvalidSimConfig("at most two contracts can be simulated"));
        }
        let times = cfg.times(init.t);
        let coeffs = contracts
            .iter()
            .map(|c| {
                times
                    .iter()
                    .map(|&t| {
                        let tau = c.time_to_maturity(t)?;
                        Ok((a_of_tau(tau, params), b_of_tau(tau, params.kappa)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            transition: ExactTransition::new(params, cfg.measure, cfg.dt(init.t)),
            times,
            x0: init.x,
            delta0: init.delta,
            seed: cfg.seed,
            n_paths: cfg.n_paths,
            measure: cfg.measure,
            coeffs,
            w0: 0.0,
            schedules: Vec::new(),
        })
    }

    /// Attaches self-financing wealth processes starting at `w0`, one per schedule.
    pub fn with_wealth(mut self, w0: f64, schedules: Vec<CashSchedule>) -> Result<Self> {
        if self.measure != Measure::Physical {
            return Err(Error::WealthUnderRiskNeutral);
        }
        if !w0.is_finite() {
            return Err(Error::NonFinite { name: "w0", value: w0 });
        }
        let steps = self.times.len() - 1;
        if schedules.iter().any(|s| s.n_steps() != steps) {
            return Err(Error::InvalidSimConfig("cash schedule does not match the time grid"));
        }
        self.w0 = w0;
        self.schedules = schedules;
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_contracts(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_schedules(&self) -> usize {
        self.schedules.len()
    }

    /// Simulates path `path`, calling `visit` at every grid point (including
    /// the initial one).
    pub fn run<V>(&self, path: usize, mut visit: V) -> PathTerminal
    where
        V: FnMut(PointView<'_>),
    {
        let mut rng = path_rng(self.seed, path);
        let nc = self.coeffs.len();
        let mut x = self.x0;
        let mut delta = self.delta0;
        let mut futures = [0.0; MAX_CONTRACTS];
        for (i, f) in futures.iter_mut().enumerate().take(nc) {
            let (a, b) = self.coeffs[i][0];
            *f = libm::exp(x + a + b * delta);
        }
        let mut wealth = vec![self.w0; self.schedules.len()];
        visit(PointView { step: 0, t: self.times[0], x, delta, futures: &futures[..nc], wealth: &wealth });

        for k in 0..self.times.len() - 1 {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            (x, delta) = self.transition.step(x, delta, z1, z2);

            let mut next = [0.0; MAX_CONTRACTS];
            for (i, f) in next.iter_mut().enumerate().take(nc) {
                let (a, b) = self.coeffs[i][k + 1];
                *f = libm::exp(x + a + b * delta);
            }
            for (w, schedule) in wealth.iter_mut().zip(&self.schedules) {
                let cash = schedule.exposure(k);
                for i in 0..nc {
                    let position = cash[i] / futures[i];
                    *w += position * (next[i] - futures[i]);
                }
            }
            futures = next;
            visit(PointView {
                step: k + 1,
                t: self.times[k + 1],
                x,
                delta,
                futures: &futures[..nc],
                wealth: &wealth,
            });
        }
        PathTerminal { x, delta, futures, wealth }
    }

    /// Full recorded path; wealth is that of the first schedule, if any.
    pub fn record(&self, path: usize) -> RecordedPath {
        let n = self.times.len();
        let nc = self.n_contracts();
        let mut rec = RecordedPath {
            x: Vec::with_capacity(n),
            delta: Vec::with_capacity(n),
            futures: (0..nc).map(|_| Vec::with_capacity(n)).collect(),
            wealth: (!self.schedules.is_empty()).then(|| Vec::with_capacity(n)),
        };
        self.run(path, |p| {
            rec.x.push(p.x);
            rec.delta.push(p.delta);
            for (row, &f) in rec.futures.iter_mut().zip(p.futures) {
                row.push(f);
            }
            if let Some(w) = rec.wealth.as_mut() {
                w.push(p.wealth[0]);
            }
        });
        rec
    }

    /// Sequential simulation of every path into a [`PathSet`].
    pub fn simulate(&self) -> PathSet {
        let paths: Vec<RecordedPath> = (0..self.n_paths).map(|p| self.record(p)).collect();
        PathSet::assemble(self.times.clone(), self.n_contracts(), paths)
    }
}

/// One recorded path, before assembly into a [`PathSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedPath {
    pub x: Vec<f64>,
    pub delta: Vec<f64>,
    pub futures: Vec<Vec<f64>>,
    pub wealth: Option<Vec<f64>>,
}

/// Row-major `paths x grid points` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    n_paths: usize,
    n_points: usize,
    data: Vec<f64>,
}

impl PathMatrix {
    pub fn zeros(n_paths: usize, n_points: usize) -> Self {
        Self { n_paths, n_points, data: vec![0.0; n_paths * n_points] }
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn row(&self, path: usize) -> &[f64] {
        &self.data[path * self.n_points..(path + 1) * self.n_points]
    }

    fn row_mut(&mut self, path: usize) -> &mut [f64] {
        &mut self.data[path * self.n_points..(path + 1) * self.n_points]
    }

    pub fn get(&self, path: usize, step: usize) -> f64 {
        self.data[path * self.n_points + step]
    }

    /// Values at the last grid point, one per path.
    pub fn terminal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_paths).map(move |p| self.get(p, self.n_points - 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub x_paths: PathMatrix,
    pub delta_paths: PathMatrix,
    pub futures_paths: Vec<PathMatrix>,
    pub wealth_paths: Option<PathMatrix>,
}

impl PathSet {
    /// Assembles recorded paths (in path order) into matrices.
    pub fn assemble(times: Vec<f64>, n_contracts: usize, paths: Vec<RecordedPath>) -> Self {
        let n_points = times.len();
        let n_paths = paths.len();
        let with_wealth = paths.first().is_some_and(|p| p.wealth.is_some());
        let mut set = PathSet {
            times,
            x_paths: PathMatrix::zeros(n_paths, n_points),
            delta_paths: PathMatrix::zeros(n_paths, n_points),
            futures_paths: (0..n_contracts).map(|_| PathMatrix::zeros(n_paths, n_points)).collect(),
            wealth_paths: with_wealth.then(|| PathMatrix::zeros(n_paths, n_points)),
        };
        for (p, rec) in paths.into_iter().enumerate() {
            set.x_paths.row_mut(p).copy_from_slice(&rec.x);
            set.delta_paths.row_mut(p).copy_from_slice(&rec.delta);
            for (m, row) in set.futures_paths.iter_mut().zip(&rec.futures) {
                m.row_mut(p).copy_from_slice(row);
            }
            if let (Some(m), Some(w)) = (set.wealth_paths.as_mut(), rec.wealth.as_ref()) {
                m.row_mut(p).copy_from_slice(w);
            }
        }
        set
    }

    pub fn n_paths(&self) -> usize {
        self.x_paths.n_paths()
    }
}
