//! One-parameter sweeps of positions, certainty equivalents and wealth
//! moments, emitted as plot-ready CSV.

use std::fmt;
use std::str::FromStr;

use cyfut_core::strategy::{pair_position, phi_pair, phi_single, single_position, wealth_moments};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, ConfigEcho, Resolved};
use crate::error::{Error, Result};
use crate::output::{csv_buffer, finish_csv, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    EtaBar,
    Eta,
    Gamma,
    Lambda,
    T1,
    T2,
}

impl SweepParam {
    fn set(self, cfg: &mut Config, v: f64) {
        match self {
            SweepParam::EtaBar => cfg.eta_bar = v,
            SweepParam::Eta => cfg.eta = v,
            SweepParam::Gamma => cfg.gamma = v,
            SweepParam::Lambda => cfg.lambda = v,
            SweepParam::T1 => {
                cfg.t1 = Some(v);
                cfg.t1_date = None;
            }
            SweepParam::T2 => {
                cfg.t2 = Some(v);
                cfg.t2_date = None;
            }
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "eta_bar" => SweepParam::EtaBar,
            "eta" => SweepParam::Eta,
            "gamma" => SweepParam::Gamma,
            "lambda" => SweepParam::Lambda,
            "T1" => SweepParam::T1,
            "T2" => SweepParam::T2,
            _ => return Err(format!("unknown sweep parameter {s:?} (eta_bar|eta|gamma|lambda|T1|T2)")),
        })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::EtaBar => "eta_bar",
            SweepParam::Eta => "eta",
            SweepParam::Gamma => "gamma",
            SweepParam::Lambda => "lambda",
            SweepParam::T1 => "T1",
            SweepParam::T2 => "T2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    Pi1,
    Pi2,
    Pi1Single,
    Pi2Single,
    CePair,
    CeSingle1,
    CeSingle2,
    MuW,
    SigmaW,
}

impl SweepOutput {
    pub const ALL: [SweepOutput; 9] = [
        SweepOutput::Pi1,
        SweepOutput::Pi2,
        SweepOutput::Pi1Single,
        SweepOutput::Pi2Single,
        SweepOutput::CePair,
        SweepOutput::CeSingle1,
        SweepOutput::CeSingle2,
        SweepOutput::MuW,
        SweepOutput::SigmaW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepOutput::Pi1 => "pi1",
            SweepOutput::Pi2 => "pi2",
            SweepOutput::Pi1Single => "pi1_single",
            SweepOutput::Pi2Single => "pi2_single",
            SweepOutput::CePair => "ce_pair",
            SweepOutput::CeSingle1 => "ce_single_1",
            SweepOutput::CeSingle2 => "ce_single_2",
            SweepOutput::MuW => "mu_w",
            SweepOutput::SigmaW => "sigma_w",
        }
    }
}

impl FromStr for SweepOutput {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown sweep output {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub outputs: Vec<SweepOutput>,
    /// Evaluation time and prices for the position outputs.
    pub t: f64,
    pub f1: f64,
    pub f2: f64,
}

impl SweepSpec {
    pub fn new(parameter: SweepParam, lo: f64, hi: f64, n: usize) -> Self {
        Self { parameter, lo, hi, n, outputs: SweepOutput::ALL.to_vec(), t: 0.0, f1: 100.0, f2: 100.0 }
    }

    /// `n` points from `lo` to `hi`, both ends exact.
    pub fn grid(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|k| if k + 1 == self.n { self.hi } else { self.lo + step * k as f64 }).collect()
    }

    fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Sweep(format!("need finite lo < hi (got {} .. {})", self.lo, self.hi)));
        }
        if self.n < 2 {
            return Err(Error::Sweep(format!("need at least 2 grid points (got {})", self.n)));
        }
        if self.outputs.is_empty() {
            return Err(Error::Sweep("no outputs requested".into()));
        }
        for (name, f) in [("F1", self.f1), ("F2", self.f2)] {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Sweep(format!("{name} must be positive (got {f})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub config: ConfigEcho,
    pub sweep: SweepSpec,
}

/// Evaluates the requested outputs at one resolved grid point.
pub fn evaluate(r: &Resolved, spec: &SweepSpec) -> Result<Vec<f64>> {
    let (p, prefs) = (&r.params, &r.prefs);
    let mut pair = None;
    let mut out = Vec::with_capacity(spec.outputs.len());
    for o in &spec.outputs {
        let v = match o {
            SweepOutput::Pi1 | SweepOutput::Pi2 => {
                let s = match &pair {
                    Some(s) => s,
                    None => pair.insert(pair_position(spec.t, spec.f1, spec.f2, r.c1, r.c2, p, prefs)?),
                };
                s.positions[if *o == SweepOutput::Pi1 { 0 } else { 1 }]
            }
            SweepOutput::Pi1Single => single_position(spec.t, spec.f1, r.c1, p, prefs)?.positions[0],
            SweepOutput::Pi2Single => single_position(spec.t, spec.f2, r.c2, p, prefs)?.positions[0],
            SweepOutput::CePair => phi_pair(spec.t, p, prefs)? / prefs.gamma,
            SweepOutput::CeSingle1 => phi_single(spec.t, r.c1, p, prefs)? / prefs.gamma,
            SweepOutput::CeSingle2 => phi_single(spec.t, r.c2, p, prefs)? / prefs.gamma,
            SweepOutput::MuW => wealth_moments(p, prefs).mu_w,
            SweepOutput::SigmaW => wealth_moments(p, prefs).sigma_w,
        };
        out.push(v);
    }
    Ok(out)
}

/// One sweep row: the parameter value and the requested outputs.
pub type SweepRow = (f64, Vec<f64>);

/// Rows of `(param_value, outputs...)`. Every grid point is validated
/// before any is evaluated.
pub fn run_sweep(config: &Config, spec: &SweepSpec) -> Result<(Vec<SweepRow>, SweepSummary)> {
    spec.check()?;
    let base = config.resolve(None)?;
    let grid = spec.grid();
    let resolved = grid
        .iter()
        .map(|&v| {
            let mut cfg = config.clone();
            spec.parameter.set(&mut cfg, v);
            let r = cfg
                .resolve(None)
                .map_err(|e| Error::Sweep(format!("{} = {v}: {e}", spec.parameter)))?;
            if spec.t > r.prefs.horizon || spec.t < 0.0 {
                return Err(Error::Sweep(format!("t = {} outside [0, horizon = {}]", spec.t, r.prefs.horizon)));
            }
            let pair_wanted = spec.outputs.iter().any(|o| matches!(o, SweepOutput::Pi1 | SweepOutput::Pi2));
            if pair_wanted && (r.c2.maturity - r.c1.maturity).abs() < cyfut_core::strategy::MIN_MATURITY_GAP {
                return Err(Error::Sweep(format!("{} = {v}: T1 and T2 coincide", spec.parameter)));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = resolved
        .par_iter()
        .zip(grid.par_iter())
        .map(|(r, &v)| evaluate(r, spec).map(|vals| (v, vals)))
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, SweepSummary { config: base.echo(), sweep: spec.clone() }))
}

/// `param_value,<outputs>`.
pub fn sweep_csv(spec: &SweepSpec, rows: &[(f64, Vec<f64>)]) -> Result<Vec<u8>> {
    let mut w = csv_buffer();
    let mut header = vec!["param_value"];
    header.extend(spec.outputs.iter().map(|o| o.name()));
    w.write_record(&header)?;
    for (v, vals) in rows {
        let mut rec = vec![fmt_f64(*v)];
        rec.extend(vals.iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec)?;
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_exact() {
        let s = SweepSpec::new(SweepParam::EtaBar, 0.25, 0.75, 11);
        let g = s.grid();
        assert_eq!(g[0], 0.25);
        assert_eq!(g[10], 0.75);
        assert_eq!(g.len(), 11);
    }

    #[test]
    fn invalid_point_rejected_before_evaluation() {
        let s = SweepSpec::new(SweepParam::EtaBar, -0.5, 0.5, 5);
        let e = run_sweep(&Config::default(), &s).unwrap_err();
        assert!(e.to_string().contains("eta_bar = -0.5"), "{e}");
        let s = SweepSpec::new(SweepParam::T1, 0.5, 1.2, 3);
        assert!(run_sweep(&Config::default(), &s).is_err());
        assert!(run_sweep(&Config::default(), &SweepSpec::new(SweepParam::Gamma, 0.1, 0.1, 3)).is_err());
        assert!(run_sweep(&Config::default(), &SweepSpec::new(SweepParam::Gamma, 0.1, 0.2, 1)).is_err());
    }

    #[test]
    fn nearly_degenerate_range() {
        let s = SweepSpec::new(SweepParam::Gamma, 0.01, 0.01 + 1e-12, 2);
        let (rows, _) = run_sweep(&Config::default(), &s).unwrap();
        for (a, b) in rows[0].1.iter().zip(&rows[1].1) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-12), "{a} {b}");
        }
    }

    #[test]
    fn outputs_parse() {
        for o in SweepOutput::ALL {
            assert_eq!(o.name().parse::<SweepOutput>().unwrap(), o);
        }
        assert!("pi3".parse::<SweepOutput>().is_err());
        assert_eq!("T2".parse::<SweepParam>().unwrap().to_string(), "T2");
    }
}
