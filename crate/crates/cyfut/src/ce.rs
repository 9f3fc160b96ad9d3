//! Certainty-equivalent table at `t = 0`.

use cyfut_core::strategy::{phi_pair, phi_single, value_and_ce};
use serde::Serialize;

use crate::config::{ConfigEcho, Resolved};
use crate::error::Result;
use crate::output::{csv_buffer, finish_csv, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeTable {
    /// Initial wealth.
    pub w: f64,
    /// Both contracts traded jointly.
    pub c0: f64,
    pub c1_single: f64,
    pub c2_single: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CeSummary {
    pub config: ConfigEcho,
    pub table: CeTable,
}

pub fn ce_table(r: &Resolved, w: f64) -> Result<CeTable> {
    let (p, prefs) = (&r.params, &r.prefs);
    let ce = |phi: f64| value_and_ce(w, phi, prefs).certainty_equivalent;
    Ok(CeTable {
        w,
        c0: ce(phi_pair(0.0, p, prefs)?),
        c1_single: ce(phi_single(0.0, r.c1, p, prefs)?),
        c2_single: ce(phi_single(0.0, r.c2, p, prefs)?),
    })
}

/// `name,value` rows.
pub fn ce_csv(t: &CeTable) -> Result<Vec<u8>> {
    let mut w = csv_buffer();
    w.write_record(["name", "value"])?;
    for (name, v) in [("C0", t.c0), ("C1_single", t.c1_single), ("C2_single", t.c2_single)] {
        w.write_record([name.to_owned(), fmt_f64(v)])?;
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn reference_table() {
        let r = Config::default().resolve(None).unwrap();
        let t = ce_table(&r, 0.0).unwrap();
        assert!((t.c1_single - 0.1418).abs() < 0.02 * 0.1418);
        assert!((t.c2_single - 0.1782).abs() < 0.02 * 0.1782);
        assert!((t.c0 - 0.845_714_285_714).abs() < 1e-9);
        assert!(t.c0 > t.c1_single + t.c2_single);
    }

    #[test]
    fn no_premium_no_gain() {
        let r = Config::load(None, &["mu=0.001".into(), "lambda=0".into()]).unwrap().resolve(None).unwrap();
        let t = ce_table(&r, 0.0).unwrap();
        assert_eq!((t.c0, t.c1_single, t.c2_single), (0.0, 0.0, 0.0));
        let t = ce_table(&r, 5.0).unwrap();
        assert_eq!(t.c0, 5.0);
    }
}
