//! Verification suite: independent oracles for the closed forms, bundled
//! into a deterministic report.
//!
//! Each check yields one [`CheckResult`]. Negative controls feed deliberately
//! corrupted inputs to an oracle and pass only if the oracle notices.

mod algebra;
mod hjb;
mod mc;
mod ode;

use std::fmt;

use serde::Serialize;

use crate::config::{ConfigEcho, Resolved};
use crate::error::Result;
use crate::output::{csv_buffer, finish_csv, fmt_f64};

pub use algebra::{dual_formula_checks, identity_checks, phi_pair_by_quadrature, singularity_checks};
pub use hjb::{run_hjb_checks, HjbGrid};
pub use mc::{run_mc_checks, McOptions};
pub use ode::{rk4_coefficients, run_ode_checks, run_pde_checks, CoeffsUnderTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Pass iff `observed <= threshold`.
    Residual,
    /// Pass iff `|observed - target| <= threshold`.
    Comparison,
    /// Pass iff `observed > threshold`; used by negative controls.
    Exceeds,
    /// Pass iff `observed < target - threshold`.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub status: Status,
    pub observed: f64,
    pub target: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, kind: CheckKind, observed: f64, target: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let ok = match kind {
            CheckKind::Residual => observed <= threshold,
            CheckKind::Comparison => (observed - target).abs() <= threshold,
            CheckKind::Exceeds => observed > threshold,
            CheckKind::Below => observed < target - threshold,
        };
        Self {
            name: name.into(),
            kind,
            status: if ok { Status::Pass } else { Status::Fail },
            observed,
            target,
            threshold,
            detail: detail.into(),
        }
    }

    pub fn residual(name: impl Into<String>, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, CheckKind::Residual, observed, 0.0, threshold, detail)
    }

    pub fn comparison(name: impl Into<String>, observed: f64, target: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, CheckKind::Comparison, observed, target, threshold, detail)
    }

    pub fn exceeds(name: impl Into<String>, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, CheckKind::Exceeds, observed, 0.0, threshold, detail)
    }

    pub fn below(name: impl Into<String>, observed: f64, target: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, CheckKind::Below, observed, target, threshold, detail)
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, err: impl fmt::Display) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Residual,
            status: Status::Fail,
            observed: f64::NAN,
            target: 0.0,
            threshold: 0.0,
            detail: format!("error: {err}"),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Runs a group of checks, turning an evaluation error into one failed entry.
pub(crate) fn guard(group: &str, f: impl FnOnce() -> Result<Vec<CheckResult>>) -> Vec<CheckResult> {
    f().unwrap_or_else(|e| vec![CheckResult::errored(group, e)])
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    /// Points per contract on the ODE grid.
    pub ode_grid: usize,
    pub pde_points: usize,
    pub pde_bump: f64,
    pub hjb: HjbGrid,
    pub dual_points: usize,
    pub identity_draws: usize,
    pub singular_points: usize,
    /// Seed for the random test points.
    pub seed: u64,
    /// `None` skips the Monte Carlo checks.
    pub mc: Option<McOptions>,
    pub workers: usize,
    /// Debug switch: verify a corrupted `A` coefficient instead of the real
    /// one. The suite must then fail.
    pub corrupt: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            ode_grid: 1000,
            pde_points: 200,
            pde_bump: 1e-4,
            hjb: HjbGrid::default(),
            dual_points: 100,
            identity_draws: 20,
            singular_points: 100,
            seed: 20140601,
            mc: Some(McOptions::default()),
            workers: 0,
            corrupt: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReportSummary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub options: VerifyOptions,
    pub warnings: Vec<String>,
    pub summary: ReportSummary,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.all_passed
    }

    pub fn find(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `name,kind,status,observed,target,threshold,detail`, in suite order.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_buffer();
        w.write_record(["name", "kind", "status", "observed", "target", "threshold", "detail"])?;
        for c in &self.checks {
            let kind = serde_json::to_value(c.kind)?;
            w.write_record([
                c.name.clone(),
                kind.as_str().unwrap_or_default().to_owned(),
                c.status.to_string(),
                fmt_f64(c.observed),
                fmt_f64(c.target),
                fmt_f64(c.threshold),
                c.detail.clone(),
            ])?;
        }
        finish_csv(w)
    }
}

fn warnings(r: &Resolved) -> Vec<String> {
    let mut out = Vec::new();
    let rho = r.params.rho;
    if 1.0 - rho * rho < 1e-4 {
        out.push(format!(
            "rho = {rho} is close to +-1: the pair value and positions divide by 1 - rho^2 = {:e}",
            1.0 - rho * rho
        ));
    }
    if let Ok(r12) = cyfut_core::dynamics::corr_rho12(0.0, r.c1, r.c2, &r.params) {
        if 1.0 - r12 * r12 < 1e-4 {
            out.push(format!(
                "contract correlation rho12(0) = {r12} is close to 1: 1 - rho12^2 = {:e}",
                1.0 - r12 * r12
            ));
        }
    }
    if (r.c2.maturity - r.c1.maturity).abs() < cyfut_core::strategy::MIN_MATURITY_GAP {
        out.push("T1 and T2 coincide: pair checks cannot be evaluated".into());
    }
    out
}

/// The full suite, in a fixed order.
pub fn run_suite(r: &Resolved, opts: &VerifyOptions) -> Report {
    let coeffs = if opts.corrupt { CoeffsUnderTest::CorruptedA } else { CoeffsUnderTest::ClosedForm };
    let mut checks = Vec::new();
    for c in r.contracts() {
        checks.extend(run_ode_checks(&r.params, c, opts.ode_grid, coeffs));
    }
    checks.extend(run_pde_checks(&r.params, &r.contracts(), opts.pde_points, opts.pde_bump, opts.seed, coeffs));
    checks.extend(run_hjb_checks(&r.params, &r.prefs, &r.contracts(), &opts.hjb));
    checks.extend(dual_formula_checks(r, opts.dual_points, opts.seed));
    checks.extend(identity_checks(r, opts.identity_draws, opts.seed));
    checks.extend(singularity_checks(opts.singular_points, opts.seed));
    if let Some(mc) = &opts.mc {
        checks.extend(run_mc_checks(&r.params, &r.prefs, &r.contracts(), mc, opts.workers));
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    Report {
        config: r.echo(),
        options: opts.clone(),
        warnings: warnings(r),
        summary: ReportSummary { checks: checks.len(), passed, failed: checks.len() - passed, all_passed: passed == checks.len() },
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_rules() {
        assert!(CheckResult::residual("a", 1e-9, 1e-8, "").passed());
        assert!(!CheckResult::residual("a", f64::NAN, 1e-8, "").passed());
        assert!(CheckResult::comparison("a", 1.05, 1.0, 0.1, "").passed());
        assert!(!CheckResult::comparison("a", 1.2, 1.0, 0.1, "").passed());
        assert!(CheckResult::exceeds("a", 1.0, 1e-8, "").passed());
        assert!(!CheckResult::exceeds("a", 1e-9, 1e-8, "").passed());
        assert!(CheckResult::below("a", -1.0, 0.0, 0.5, "").passed());
        assert!(!CheckResult::below("a", -0.4, 0.0, 0.5, "").passed());
        assert!(!CheckResult::below("a", 0.0, 0.0, 0.0, "").passed());
    }
}
