use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyfut::backtest::{backtest_csv, read_rows, run_backtest};
use cyfut::ce::{ce_csv, ce_table, CeSummary};
use cyfut::config::Config;
use cyfut::output::{to_json, write_file, write_or_stdout};
use cyfut::sim::{cmd_simulate, SimulateOptions, Traded, DEFAULT_MAX_POINTS, DEFAULT_STEPS_PER_YEAR};
use cyfut::sweep::{run_sweep, sweep_csv, SweepOutput, SweepParam, SweepSpec};
use cyfut::verify::{run_suite, HjbGrid, McOptions, VerifyOptions};
use cyfut::Result;
use cyfut_core::dynamics::Measure;

#[derive(Parser)]
#[command(name = "cyfut", version, about = "Optimal futures trading under a two-factor convenience-yield model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; built-in defaults when omitted
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set gamma=0.05 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config> {
        Config::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pair positions along a `date,F1,F2` settlement-price CSV
    Backtest {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        input: PathBuf,
        /// Output CSV (stdout when omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// JSON summary with the resolved config
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Sweep one parameter and emit plot-ready CSV
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// eta_bar | eta | gamma | lambda | T1 | T2
        #[arg(long)]
        param: SweepParam,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 51)]
        n: usize,
        /// Comma-separated subset of pi1,pi2,pi1_single,pi2_single,ce_pair,ce_single_1,ce_single_2,mu_w,sigma_w
        #[arg(long, value_delimiter = ',')]
        outputs: Vec<SweepOutput>,
        /// Evaluation time for positions and certainty equivalents
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 100.0)]
        f1: f64,
        #[arg(long, default_value_t = 100.0)]
        f2: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Certainty equivalents at t = 0 (pair and each contract alone)
    Ce {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Initial wealth
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        w: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Monte Carlo paths of state, futures and optimal wealth
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Writes paths.csv (unless --no-paths) and summary.json here
        #[arg(long, default_value = "sim-out")]
        out_dir: PathBuf,
    },
    /// Run the verification suite; exit status 2 if any check fails
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        verify: VerifyArgs,
        /// Writes report.csv and report.json here
        #[arg(long, default_value = "verify-out")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    P,
    Q,
}

#[derive(Clone, Copy, ValueEnum)]
enum TradeArg {
    Pair,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Total steps over the horizon; overrides --steps-per-year
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_YEAR)]
    steps_per_year: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "p")]
    measure: MeasureArg,
    /// Strategy whose wealth is tracked under P
    #[arg(long, value_enum, default_value = "pair")]
    trade: TradeArg,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 100.0)]
    spot: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    w0: f64,
    /// Cap on recorded grid points, paths x (steps + 1)
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
    /// Only write the summary; memory stays O(paths)
    #[arg(long)]
    no_paths: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20140601)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    mc_paths: usize,
    #[arg(long, default_value_t = 500.0)]
    mc_steps_per_year: f64,
    #[arg(long, default_value_t = 42)]
    mc_seed: u64,
    /// Skip the Monte Carlo checks
    #[arg(long)]
    no_mc: bool,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Debug: verify a deliberately corrupted A coefficient (the suite must fail)
    #[arg(long)]
    corrupt: bool,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Backtest { cfg, input, out, summary } => {
            let config = cfg.load()?;
            let rows = read_rows(&input)?;
            let (points, s) = run_backtest(&config, &rows, &input)?;
            write_or_stdout(out.as_deref(), &backtest_csv(&points)?)?;
            if let Some(path) = summary {
                write_file(&path, &to_json(&s)?)?;
            }
        }
        Command::Sweep { cfg, param, lo, hi, n, outputs, t, f1, f2, out, summary } => {
            let config = cfg.load()?;
            let mut spec = SweepSpec::new(param, lo, hi, n);
            if !outputs.is_empty() {
                spec.outputs = outputs;
            }
            (spec.t, spec.f1, spec.f2) = (t, f1, f2);
            let (rows, s) = run_sweep(&config, &spec)?;
            write_or_stdout(out.as_deref(), &sweep_csv(&spec, &rows)?)?;
            if let Some(path) = summary {
                write_file(&path, &to_json(&s)?)?;
            }
        }
        Command::Ce { cfg, w, out, summary } => {
            let resolved = cfg.load()?.resolve(None)?;
            let table = ce_table(&resolved, w)?;
            write_or_stdout(out.as_deref(), &ce_csv(&table)?)?;
            if let Some(path) = summary {
                write_file(&path, &to_json(&CeSummary { config: resolved.echo(), table })?)?;
            }
        }
        Command::Simulate { cfg, sim, out_dir } => {
            let resolved = cfg.load()?.resolve(None)?;
            let opts = SimulateOptions {
                n_paths: sim.paths,
                n_steps: sim.steps,
                steps_per_year: sim.steps_per_year,
                seed: sim.seed,
                measure: match sim.measure {
                    MeasureArg::P => Measure::Physical,
                    MeasureArg::Q => Measure::RiskNeutral,
                },
                workers: sim.workers,
                traded: match sim.trade {
                    TradeArg::Pair => Traded::Pair,
                    TradeArg::One => Traded::Single1,
                    TradeArg::Two => Traded::Single2,
                },
                spot: sim.spot,
                delta0: sim.delta0,
                w0: sim.w0,
                max_points: sim.max_points,
                record_paths: !sim.no_paths,
            };
            let out = cmd_simulate(&resolved, &opts)?;
            if let Some(csv) = &out.paths_csv {
                write_file(&out_dir.join("paths.csv"), csv)?;
            }
            write_file(&out_dir.join("summary.json"), &to_json(&out.summary)?)?;
            if let Some(w) = &out.summary.wealth {
                println!(
                    "wealth gain mean {:.6} (closed form {:.6}, z {:.2}); utility z {:.2}",
                    w.gain.mean, w.analytic_gain_mean, w.gain_mean_z, w.utility_z
                );
            }
            for m in &out.summary.martingale {
                println!("F{} terminal mean {:.6} vs initial {:.6} (z {:.2})", m.contract, m.terminal.mean, m.initial, m.z);
            }
        }
        Command::Verify { cfg, verify, out_dir } => {
            let resolved = cfg.load()?.resolve(None)?;
            let opts = VerifyOptions {
                hjb: HjbGrid::default(),
                seed: verify.seed,
                mc: (!verify.no_mc).then(|| McOptions {
                    n_paths: verify.mc_paths,
                    steps_per_year: verify.mc_steps_per_year,
                    seed: verify.mc_seed,
                    ..McOptions::default()
                }),
                workers: verify.workers,
                corrupt: verify.corrupt,
                ..VerifyOptions::default()
            };
            let report = run_suite(&resolved, &opts);
            write_file(&out_dir.join("report.csv"), &report.to_csv()?)?;
            write_file(&out_dir.join("report.json"), &to_json(&report)?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for c in &report.checks {
                println!("{} {} observed={:e} threshold={:e}", c.status, c.name, c.observed, c.threshold);
            }
            let s = report.summary;
            println!("{}/{} checks passed", s.passed, s.checks);
            if !s.all_passed {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
