//! Pair-strategy positions along a daily settlement-price history.
//!
//! Input is `date,F1,F2` with ISO dates in strictly increasing order; lines
//! starting with `#` are comments. The first date is `t = 0` and times are
//! ACT/365 year fractions from it.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use cyfut_core::strategy::pair_position;
use cyfut_core::RiskPrefs;
use serde::Serialize;

use crate::config::{Config, ConfigEcho, year_fraction, DAY_COUNT};
use crate::error::{Error, Result};
use crate::output::{csv_buffer, finish_csv, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktestRow {
    pub date: NaiveDate,
    pub f1: f64,
    pub f2: f64,
    /// 1-based line number in the source file.
    pub line: u64,
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktestPoint {
    pub date: NaiveDate,
    pub t: f64,
    pub f1: f64,
    pub f2: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub cash1: f64,
    pub cash2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BacktestSummary {
    pub config: ConfigEcho,
    pub day_count: &'static str,
    pub rows: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub last_t: f64,
}

pub fn read_rows(path: &Path) -> Result<Vec<BacktestRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rows(&text, path)
}

/// Parses and checks the input CSV; errors carry the offending line.
pub fn parse_rows(text: &str, source: &Path) -> Result<Vec<BacktestRow>> {
    let err = |line: u64, msg: String| Error::Input { path: PathBuf::from(source), line, msg };
    // the format is three unquoted fields, so lines are split directly;
    // this keeps line numbers exact across comments and blank lines
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
    if fields(header) != ["date", "F1", "F2"] {
        return Err(err(header_line, format!("expected header date,F1,F2, found {header}")));
    }
    let mut rows: Vec<BacktestRow> = Vec::new();
    for (line, text) in lines {
        let record = fields(text);
        if record.len() != 3 {
            return Err(err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(record[0], "%Y-%m-%d")
            .map_err(|e| err(line, format!("bad date {:?}: {e}", record[0])))?;
        let price = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = record[i].parse().map_err(|_| err(line, format!("bad {name} {:?}", record[i])))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(err(line, format!("{name} must be a positive price (got {v})")));
            }
            Ok(v)
        };
        let row = BacktestRow { date, f1: price(1, "F1")?, f2: price(2, "F2")?, line };
        if let Some(prev) = rows.last() {
            if row.date <= prev.date {
                return Err(err(line, format!("date {} does not follow {} (line {})", row.date, prev.date, prev.line)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(header_line, "no data rows".into()));
    }
    Ok(rows)
}

/// Positions at every row. The horizon is taken as the near maturity, so
/// `config.horizon` is not used here.
pub fn run_backtest(config: &Config, rows: &[BacktestRow], source: &Path) -> Result<(Vec<BacktestPoint>, BacktestSummary)> {
    let anchor = rows.first().map(|r| r.date).ok_or_else(|| Error::Input {
        path: source.into(),
        line: 0,
        msg: "no data rows".into(),
    })?;
    let mut cfg = config.clone();
    // horizon is replaced below; keep validation from tripping on it
    cfg.horizon = 0.0;
    let resolved = cfg.resolve(Some(anchor))?;
    let (c1, c2) = (resolved.c1, resolved.c2);
    if c1.maturity >= c2.maturity {
        return Err(Error::Config(format!(
            "backtest needs T1 < T2 (got T1 = {}, T2 = {})",
            c1.maturity, c2.maturity
        )));
    }
    let prefs = RiskPrefs { gamma: resolved.prefs.gamma, horizon: c1.maturity }.validate(&[c1, c2])?;
    let mut resolved = resolved;
    resolved.prefs = prefs;
    resolved.config.horizon = prefs.horizon;

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let t = year_fraction(anchor, row.date);
        if t >= c1.maturity {
            return Err(Error::Input {
                path: source.into(),
                line: row.line,
                msg: format!("date {} is at or past the near maturity (t = {t}, T1 = {})", row.date, c1.maturity),
            });
        }
        let s = pair_position(t, row.f1, row.f2, c1, c2, &resolved.params, &prefs)?;
        out.push(BacktestPoint {
            date: row.date,
            t,
            f1: row.f1,
            f2: row.f2,
            pi1: s.positions[0],
            pi2: s.positions[1],
            cash1: s.cash_exposures[0],
            cash2: s.cash_exposures[1],
        });
    }
    let last = out.last().expect("non-empty");
    let summary = BacktestSummary {
        config: resolved.echo(),
        day_count: DAY_COUNT,
        rows: out.len(),
        first_date: anchor,
        last_date: last.date,
        last_t: last.t,
    };
    Ok((out, summary))
}

/// `date,t,F1,F2,pi1,pi2,pi_sum,cash1,cash2`.
pub fn backtest_csv(points: &[BacktestPoint]) -> Result<Vec<u8>> {
    let mut w = csv_buffer();
    w.write_record(["date", "t", "F1", "F2", "pi1", "pi2", "pi_sum", "cash1", "cash2"])?;
    for p in points {
        w.write_record([
            p.date.to_string(),
            fmt_f64(p.t),
            fmt_f64(p.f1),
            fmt_f64(p.f2),
            fmt_f64(p.pi1),
            fmt_f64(p.pi2),
            fmt_f64(p.pi1 + p.pi2),
            fmt_f64(p.cash1),
            fmt_f64(p.cash2),
        ])?;
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<BacktestRow>> {
        parse_rows(text, Path::new("in.csv"))
    }

    #[test]
    fn comments_and_line_numbers() {
        let rows = parse("# synthetic\ndate,F1,F2\n2014-03-21,100,99\n# gap\n2014-03-24,101,100\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].line, 3);
        assert_eq!(rows[1].line, 5);
    }

    #[test]
    fn malformed_rows_report_line() {
        let e = parse("date,F1,F2\n2014-03-21,100,99\n2014-03-24,abc,100\n").unwrap_err();
        assert!(e.to_string().starts_with("in.csv:3:"), "{e}");
        let e = parse("date,F1,F2\n2014-03-21,100,99\n2014-03-21,100,99\n").unwrap_err();
        assert!(e.to_string().contains(":3:"), "{e}");
        let e = parse("date,F1,F2\n2014-03-21,100,-1\n").unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
        let e = parse("date,F1,F2\n21/03/2014,100,99\n").unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
        let e = parse("date,F1,F2\n2014-03-21,100\n").unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
        assert!(parse("date,F2,F1\n2014-03-21,100,99\n").is_err());
        assert!(parse("date,F1,F2\n").is_err());
    }

    #[test]
    fn past_maturity_rejected() {
        let rows = parse("date,F1,F2\n2014-03-21,100,99\n2014-05-21,100,99\n").unwrap();
        let cfg = Config::load(None, &["T1_date=2014-05-20".into(), "T2_date=2014-06-20".into()]).unwrap();
        let e = run_backtest(&cfg, &rows, Path::new("in.csv")).unwrap_err();
        assert!(e.to_string().contains(":3:"), "{e}");
    }
}
