//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cyfut::ce::ce_table;
use cyfut::sim::{cmd_simulate, SimulateOptions};
use cyfut::sweep::{run_sweep, SweepOutput, SweepParam, SweepSpec};
use cyfut::verify::{
    dual_formula_checks, identity_checks, phi_pair_by_quadrature, run_hjb_checks, run_mc_checks, run_ode_checks,
    run_pde_checks, singularity_checks, CheckResult, CoeffsUnderTest, McOptions, VerifyOptions,
};
use cyfut::{Config, Resolved};
use cyfut_core::strategy::phi_pair;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    fn from_checks(checks: &[CheckResult]) -> Self {
        let failed: Vec<String> =
            checks.iter().filter(|c| !c.passed()).map(|c| format!("{} observed={:e}", c.name, c.observed)).collect();
        if checks.is_empty() {
            return Self::new(false, "no checks ran");
        }
        if failed.is_empty() {
            let observed = checks
                .iter()
                .map(|c| format!("{}={:.3e}", c.name, c.observed))
                .collect::<Vec<_>>()
                .join(" ");
            Self::new(true, format!("{} checks: {observed}", checks.len()))
        } else {
            Self::new(false, format!("failed: {}", failed.join("; ")))
        }
    }

    fn and_within(mut self, elapsed: Duration, limit: Duration) -> Self {
        self.detail = format!("{} | {:.3} s (limit {} s)", self.detail, elapsed.as_secs_f64(), limit.as_secs());
        if elapsed >= limit {
            self.pass = false;
        }
        self
    }
}

fn reference() -> Resolved {
    Config::default().resolve(None).expect("reference config")
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn ode_fidelity() -> Outcome {
    let r = reference();
    let opts = VerifyOptions::default();
    let (checks, elapsed) = timed(|| run_ode_checks(&r.params, r.c1, opts.ode_grid, CoeffsUnderTest::ClosedForm));
    Outcome::from_checks(&checks).and_within(elapsed, Duration::from_secs(1))
}

fn pde_residual() -> Outcome {
    let r = reference();
    let opts = VerifyOptions::default();
    let checks = run_pde_checks(&r.params, &r.contracts(), opts.pde_points, opts.pde_bump, opts.seed, CoeffsUnderTest::ClosedForm);
    Outcome::from_checks(&checks)
}

fn hjb() -> Outcome {
    let r = reference();
    Outcome::from_checks(&run_hjb_checks(&r.params, &r.prefs, &r.contracts(), &VerifyOptions::default().hjb))
}

fn dual_formula() -> Outcome {
    let opts = VerifyOptions::default();
    Outcome::from_checks(&dual_formula_checks(&reference(), opts.dual_points, opts.seed))
}

fn identities() -> Outcome {
    let opts = VerifyOptions::default();
    Outcome::from_checks(&identity_checks(&reference(), opts.identity_draws, opts.seed))
}

fn monte_carlo() -> Outcome {
    let r = reference();
    let mc = McOptions::default();
    assert_eq!((mc.n_paths, mc.steps_per_year), (100_000, 500.0));
    let (checks, elapsed) = timed(|| run_mc_checks(&r.params, &r.prefs, &r.contracts(), &mc, 0));
    Outcome::from_checks(&checks).and_within(elapsed, Duration::from_secs(60))
}

fn ce_values() -> Outcome {
    let r = reference();
    let t = ce_table(&r, 0.0).expect("ce table");
    let rel = |x: f64, target: f64| (x - target).abs() / target;
    let e1 = rel(t.c1_single, 0.1418);
    let e2 = rel(t.c2_single, 0.1782);
    let e0 = rel(t.c0, 0.8962);
    let closed = phi_pair(0.0, &r.params, &r.prefs).expect("phi pair");
    let quad = phi_pair_by_quadrature(0.0, &r.params, &r.prefs, r.c1, r.c2).expect("quadrature");
    let qerr = (quad - closed).abs() / closed;
    Outcome::new(
        e1 < 0.02 && e2 < 0.02 && e0 < 0.10 && qerr < 1e-10,
        format!(
            "C1={:.6} ({:.2}%) C2={:.6} ({:.2}%) C0={:.6} vs 0.8962 ({:.2}%, soft 10%) quadrature rel err {:.2e}",
            t.c1_single,
            100.0 * e1,
            t.c2_single,
            100.0 * e2,
            t.c0,
            100.0 * e0,
            qerr
        ),
    )
}

fn column(rows: &[(f64, Vec<f64>)], k: usize) -> Vec<f64> {
    rows.iter().map(|(_, v)| v[k]).collect()
}

fn sweep_shapes() -> Outcome {
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    for gamma in [0.01, 0.05, 0.1] {
        let cfg = Config { gamma, ..Config::default() };
        let mut spec = SweepSpec::new(SweepParam::EtaBar, 0.25, 0.75, 51);
        spec.outputs = vec![SweepOutput::Pi1, SweepOutput::Pi2];
        let (rows, _) = run_sweep(&cfg, &spec).expect("eta_bar sweep");
        let (pi1, pi2) = (column(&rows, 0), column(&rows, 1));
        if !pi1.iter().all(|&p| p > 0.0) || !pi1.windows(2).all(|w| w[1] < w[0]) {
            problems.push(format!("pi1 not positive decreasing at gamma={gamma}"));
        }
        if !pi2.iter().all(|&p| p < 0.0) || !pi2.windows(2).all(|w| w[1] > w[0]) {
            problems.push(format!("pi2 not negative increasing at gamma={gamma}"));
        }
    }
    notes.push("eta_bar sweep 51 pts x 3 gammas".to_string());

    let mut spec = SweepSpec::new(SweepParam::Lambda, 0.05, 1.0, 96);
    spec.outputs = vec![SweepOutput::CePair, SweepOutput::CeSingle1, SweepOutput::CeSingle2];
    let (rows, _) = run_sweep(&Config::default(), &spec).expect("lambda sweep");
    for (k, name) in ["ce_pair", "ce_single_1", "ce_single_2"].iter().enumerate() {
        let ce = column(&rows, k);
        if !ce.windows(2).all(|w| w[1] > w[0]) {
            problems.push(format!("{name} not increasing in lambda"));
        }
        let min_second = ce.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).fold(f64::INFINITY, f64::min);
        if min_second.is_nan() || min_second <= 0.0 {
            problems.push(format!("{name} not convex in lambda (min second difference {min_second:e})"));
        }
    }
    notes.push("lambda sweep [0.05, 1] 96 pts".to_string());

    let t = ce_table(&reference(), 0.0).expect("ce table");
    if t.c0.is_nan() || t.c0 <= t.c1_single + t.c2_single {
        problems.push(format!("C0={} not above C1+C2={}", t.c0, t.c1_single + t.c2_single));
    }
    notes.push(format!("C0={:.4} > C1+C2={:.4}", t.c0, t.c1_single + t.c2_single));
    Outcome::new(problems.is_empty(), if problems.is_empty() { notes.join(", ") } else { problems.join("; ") })
}

fn singularity() -> Outcome {
    let opts = VerifyOptions::default();
    Outcome::from_checks(&singularity_checks(opts.singular_points, opts.seed))
}

fn cli_simulate(dir: &Path, workers: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_cyfut"))
        .args(["simulate", "--paths", "200", "--seed", "99", "--workers", workers, "--out-dir"])
        .arg(dir)
        .output()
        .expect("spawn cyfut");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut bytes = fs::read(dir.join("paths.csv")).expect("paths.csv");
    bytes.extend(fs::read(dir.join("summary.json")).expect("summary.json"));
    bytes
}

fn determinism() -> Outcome {
    let r = reference();
    let mut mismatches = Vec::new();

    let tmp = tempfile::tempdir().expect("tempdir");
    if cli_simulate(&tmp.path().join("w1"), "1") != cli_simulate(&tmp.path().join("w8"), "8") {
        mismatches.push("cli simulate output");
    }

    let run = |workers| {
        let opts = SimulateOptions { n_paths: 500, workers, ..SimulateOptions::default() };
        let out = cmd_simulate(&r, &opts).expect("simulate");
        (out.paths_csv.expect("paths"), serde_json::to_vec(&out.summary).expect("json"))
    };
    if run(1) != run(8) {
        mismatches.push("library simulate output");
    }

    let mc = McOptions { n_paths: 2_000, ..McOptions::default() };
    let report = |workers| serde_json::to_vec(&run_mc_checks(&r.params, &r.prefs, &r.contracts(), &mc, workers)).expect("json");
    if report(1) != report(8) {
        mismatches.push("monte carlo report");
    }

    Outcome::new(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "paths.csv + summary.json and MC report byte-identical for 1 and 8 workers".to_string()
        } else {
            format!("differ across worker counts: {}", mismatches.join(", "))
        },
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("affine ODE fidelity", ode_fidelity),
        ("pricing PDE residual", pde_residual),
        ("HJB residuals and control perturbation", hjb),
        ("dual-formula consistency", dual_formula),
        ("algebraic identities", identities),
        ("Monte Carlo vs closed form", monte_carlo),
        ("certainty-equivalent table", ce_values),
        ("sweep monotonicity and CE ordering", sweep_shapes),
        ("three-contract singularity", singularity),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("{} criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
