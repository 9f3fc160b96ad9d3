//! Flat TOML configuration.
//!
//! ```toml
//! mu = 0.01
//! kappa = 0.8
//! alpha = 0.0
//! eta = 0.45
//! eta_bar = 0.5
//! rho = 0.75
//! lambda = 0.05
//! r = 0.001
//! gamma = 0.01
//! horizon = 1.0
//! T1 = 1.0833333333333333
//! T2 = 1.1666666666666667
//! ```
//!
//! Maturities may instead be given as calendar dates (`T1_date`, `T2_date`);
//! those only resolve against a backtest's first date, using ACT/365.

use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use cyfut_core::{ContractSpec, ModelParams, RiskPrefs};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_T1: f64 = 13.0 / 12.0;
pub const DEFAULT_T2: f64 = 14.0 / 12.0;
pub const DAY_COUNT: &str = "ACT/365";

/// Keys accepted in a config file or via `--set`.
pub const KEYS: [&str; 14] = [
    "mu", "kappa", "alpha", "eta", "eta_bar", "rho", "lambda", "r", "gamma", "horizon", "T1", "T2",
    "T1_date", "T2_date",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub mu: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub eta: f64,
    pub eta_bar: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r: f64,
    pub gamma: f64,
    pub horizon: f64,
    #[serde(rename = "T1", skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(rename = "T2", skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(rename = "T1_date", skip_serializing_if = "Option::is_none", deserialize_with = "date_opt")]
    pub t1_date: Option<NaiveDate>,
    #[serde(rename = "T2_date", skip_serializing_if = "Option::is_none", deserialize_with = "date_opt")]
    pub t2_date: Option<NaiveDate>,
}

impl Default for Config {
    fn default() -> Self {
        Self::from_parts(ModelParams::reference(), RiskPrefs { gamma: 0.01, horizon: 1.0 })
    }
}

/// Accepts a TOML local date (`2014-05-20`) or a quoted ISO string.
fn date_opt<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<NaiveDate>, D::Error> {
    use serde::de::Error as _;
    let text = match toml::Value::deserialize(d)? {
        toml::Value::String(s) => s,
        toml::Value::Datetime(dt) => dt.to_string(),
        other => return Err(D::Error::custom(format!("expected an ISO date, got {other}"))),
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d")
        .map(Some)
        .map_err(|e| D::Error::custom(format!("bad date {text:?}: {e}")))
}

impl Config {
    pub fn from_parts(p: ModelParams, prefs: RiskPrefs) -> Self {
        Self {
            mu: p.mu,
            kappa: p.kappa,
            alpha: p.alpha,
            eta: p.eta,
            eta_bar: p.eta_bar,
            rho: p.rho,
            lambda: p.lambda,
            r: p.r,
            gamma: prefs.gamma,
            horizon: prefs.horizon,
            t1: None,
            t2: None,
            t1_date: None,
            t2_date: None,
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            mu: self.mu,
            kappa: self.kappa,
            alpha: self.alpha,
            eta: self.eta,
            eta_bar: self.eta_bar,
            rho: self.rho,
            lambda: self.lambda,
            r: self.r,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Reads `path` (defaults only when `None`) and applies `key=value`
    /// overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        Self::from_table(table)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Resolves maturities (dates need `anchor`) and validates everything.
    pub fn resolve(&self, anchor: Option<NaiveDate>) -> Result<Resolved> {
        let t1 = resolve_maturity("T1", self.t1, self.t1_date, anchor, DEFAULT_T1)?;
        let t2 = resolve_maturity("T2", self.t2, self.t2_date, anchor, DEFAULT_T2)?;
        let params = self.params().validate()?;
        let c1 = ContractSpec::new(t1)?;
        let c2 = ContractSpec::new(t2)?;
        let prefs = RiskPrefs { gamma: self.gamma, horizon: self.horizon }.validate(&[c1, c2])?;
        Ok(Resolved { config: self.clone(), params, prefs, c1, c2, anchor })
    }
}

fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    if !KEYS.contains(&key) {
        return Err(Error::Config(format!("unknown key {key:?} (expected one of {})", KEYS.join(", "))));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_owned()),
    };
    Ok((key.to_owned(), value))
}

/// Year fraction between two dates, ACT/365.
pub fn year_fraction(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.0
}

fn resolve_maturity(
    name: &str,
    frac: Option<f64>,
    date: Option<NaiveDate>,
    anchor: Option<NaiveDate>,
    default: f64,
) -> Result<f64> {
    match (frac, date) {
        (Some(_), Some(_)) => Err(Error::Config(format!("give either {name} or {name}_date, not both"))),
        (Some(t), None) => Ok(t),
        (None, None) => Ok(default),
        (None, Some(d)) => match anchor {
            Some(a) => Ok(year_fraction(a, d)),
            None => Err(Error::Config(format!(
                "{name}_date needs a backtest to anchor t = 0; give {name} as a year fraction"
            ))),
        },
    }
}

/// A validated configuration: model, investor and the two contracts.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: Config,
    pub params: ModelParams,
    pub prefs: RiskPrefs,
    pub c1: ContractSpec,
    pub c2: ContractSpec,
    pub anchor: Option<NaiveDate>,
}

impl Resolved {
    pub fn contracts(&self) -> [ContractSpec; 2] {
        [self.c1, self.c2]
    }

    /// Flat echo of every resolved value, for JSON summaries.
    pub fn echo(&self) -> ConfigEcho {
        let p = &self.params;
        ConfigEcho {
            mu: p.mu,
            kappa: p.kappa,
            alpha: p.alpha,
            alpha_tilde: p.alpha_tilde(),
            eta: p.eta,
            eta_bar: p.eta_bar,
            rho: p.rho,
            lambda: p.lambda,
            r: p.r,
            gamma: self.prefs.gamma,
            horizon: self.prefs.horizon,
            t1: self.c1.maturity,
            t2: self.c2.maturity,
            t1_date: self.config.t1_date,
            t2_date: self.config.t2_date,
            anchor_date: self.anchor,
            day_count: self.anchor.map(|_| DAY_COUNT),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub mu: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub eta: f64,
    pub eta_bar: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r: f64,
    pub gamma: f64,
    pub horizon: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T1_date", skip_serializing_if = "Option::is_none")]
    pub t1_date: Option<NaiveDate>,
    #[serde(rename = "T2_date", skip_serializing_if = "Option::is_none")]
    pub t2_date: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor_date: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day_count: Option<&'static str>,
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_toml())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_resolve_to_reference() {
        let r = Config::default().resolve(None).unwrap();
        assert_eq!(r.params, ModelParams::reference());
        assert_eq!(r.prefs, RiskPrefs { gamma: 0.01, horizon: 1.0 });
        assert_eq!(r.c1.maturity, DEFAULT_T1);
        assert_eq!(r.c2.maturity, DEFAULT_T2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Config::parse("mu = 0.01\nsigma = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
        assert!(Config::load(None, &["sigma=1".into()]).is_err());
    }

    #[test]
    fn integers_and_overrides() {
        let c = Config::load(None, &["gamma=1".into(), "T1 = 2".into(), "T2=3".into()]).unwrap();
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.t1, Some(2.0));
        assert!(Config::load(None, &["gamma".into()]).is_err());
    }

    #[test]
    fn dates_need_an_anchor() {
        let c = Config::parse("T1_date = 2014-05-20\nT2_date = \"2014-06-20\"\nhorizon = 0.01\n").unwrap();
        assert!(c.resolve(None).is_err());
        let anchor = NaiveDate::from_ymd_opt(2014, 3, 21).unwrap();
        let r = c.resolve(Some(anchor)).unwrap();
        assert_eq!(r.c1.maturity, 60.0 / 365.0);
        assert_eq!(r.c2.maturity, 91.0 / 365.0);
        let both = Config::parse("T1 = 1.0\nT1_date = 2014-05-20\n").unwrap();
        assert!(both.resolve(Some(anchor)).is_err());
    }

    #[test]
    fn validation_errors_propagate() {
        let c = Config::load(None, &["kappa=0".into()]).unwrap();
        assert!(c.resolve(None).unwrap_err().to_string().contains("kappa must exceed 1e-8"));
        let c = Config::load(None, &["horizon=2".into()]).unwrap();
        assert!(c.resolve(None).is_err());
    }

    #[test]
    fn config_round_trip() {
        let c = Config { t1: Some(DEFAULT_T1), t2_date: NaiveDate::from_ymd_opt(2014, 6, 20), ..Config::default() };
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            -10.0..10.0f64,
        ]
    }

    proptest! {
        #[test]
        fn model_params_toml_round_trip_bit_exact(
            mu in finite(), kappa in finite(), alpha in finite(), eta in finite(),
            eta_bar in finite(), rho in finite(), lambda in finite(), r in finite(),
        ) {
            let p = ModelParams { mu, kappa, alpha, eta, eta_bar, rho, lambda, r };
            let text = toml::to_string(&p).unwrap();
            let back: ModelParams = toml::from_str(&text).unwrap();
            for (a, b) in [
                (p.mu, back.mu), (p.kappa, back.kappa), (p.alpha, back.alpha), (p.eta, back.eta),
                (p.eta_bar, back.eta_bar), (p.rho, back.rho), (p.lambda, back.lambda), (p.r, back.r),
            ] {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
