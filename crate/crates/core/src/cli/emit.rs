//! Byte-stable CSV and JSON emission.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::accumulator::IotseTable;
use crate::asymptotic::AsymptoticPoint;
use crate::combinatorics::{BigCount, ExactRatio, LogValue};
use crate::ensemble::{format_ratio, TrappingSetClass};
use crate::error::{Error, Result};

/// Decimal rendering with 9 significant digits, in the style of `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One line of a sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub r_clamped: f64,
    pub omega: f64,
    /// `(alpha_o_l, beta_l, mu_l, nu_l)` per level.
    pub levels: Vec<[f64; 4]>,
}

impl SweepRow {
    pub fn from_point(
        alpha: f64,
        beta: f64,
        levels: usize,
        point: Option<&AsymptoticPoint>,
    ) -> Self {
        match point {
            Some(p) => SweepRow {
                alpha,
                beta,
                r: p.r,
                r_clamped: p.r_clamped(),
                omega: p.omega,
                levels: p
                    .levels
                    .iter()
                    .map(|l| [l.alpha_o, l.beta, l.mu, l.nu])
                    .collect(),
            },
            // Infeasible rows keep their place in the grid.
            None => SweepRow {
                alpha,
                beta,
                r: f64::NEG_INFINITY,
                r_clamped: f64::NEG_INFINITY,
                omega: f64::NAN,
                levels: vec![[f64::NAN; 4]; levels],
            },
        }
    }

    pub fn fields(&self) -> Vec<f64> {
        let mut f = vec![self.alpha, self.beta, self.r, self.r_clamped, self.omega];
        for l in &self.levels {
            f.extend_from_slice(l);
        }
        f
    }
}

pub fn sweep_header(levels: usize) -> String {
    let mut cols: Vec<String> = ["alpha", "beta", "r", "r_clamped", "omega"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for l in 1..=levels {
        for name in ["alpha_o", "beta", "mu", "nu"] {
            cols.push(format!("{name}_{l}"));
        }
    }
    cols.join(",")
}

/// Metadata comment, header, then one row per grid point.
pub fn emit_sweep_csv(
    out: &mut dyn Write,
    metadata: &str,
    levels: usize,
    rows: &[SweepRow],
) -> io::Result<()> {
    writeln!(out, "# {metadata}")?;
    writeln!(out, "{}", sweep_header(levels))?;
    for row in rows {
        let line: Vec<String> = row.fields().into_iter().map(fmt_sig9).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub key: Vec<usize>,
    pub value: String,
}

/// Serialized form of an enumerator table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableDoc {
    pub kind: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub entries: Vec<TableEntry>,
}

impl TableDoc {
    pub fn new(
        kind: &str,
        params: BTreeMap<String, serde_json::Value>,
        mut entries: Vec<TableEntry>,
    ) -> Self {
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        TableDoc {
            kind: kind.into(),
            params,
            entries,
        }
    }

    pub fn iotse(
        table: &IotseTable<BigCount>,
        params: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        let entries = table
            .entries
            .iter()
            .map(|(&(a_i, a_o, b), v)| TableEntry {
                key: vec![a_i, a_o, b],
                value: v.to_string(),
            })
            .collect();
        Self::new("iotse", params, entries)
    }

    pub fn iotse_log(
        table: &IotseTable<LogValue>,
        params: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        let entries = table
            .entries
            .iter()
            .map(|(&(a_i, a_o, b), v)| TableEntry {
                key: vec![a_i, a_o, b],
                value: format!("{:e}", v.ln()),
            })
            .collect();
        Self::new("iotse", params, entries)
    }

    pub fn ensemble(
        table: &BTreeMap<TrappingSetClass, ExactRatio>,
        params: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        let entries = table
            .iter()
            .map(|(c, v)| TableEntry {
                key: vec![c.a, c.b],
                value: format_ratio(v),
            })
            .collect();
        Self::new("ensemble_tse", params, entries)
    }

    pub fn ensemble_log(
        table: &BTreeMap<TrappingSetClass, LogValue>,
        params: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        let entries = table
            .iter()
            .map(|(c, v)| TableEntry {
                key: vec![c.a, c.b],
                value: format!("{:e}", v.ln()),
            })
            .collect();
        Self::new("ensemble_tse", params, entries)
    }

    /// Compact JSON, one entry per line.
    pub fn write(&self, out: &mut dyn Write) -> io::Result<()> {
        let kind = serde_json::to_string(&self.kind)?;
        let params = serde_json::to_string(&self.params)?;
        write!(out, "{{\"kind\":{kind},\"params\":{params},\"entries\":[")?;
        for (i, e) in self.entries.iter().enumerate() {
            let sep = if i == 0 { "\n" } else { ",\n" };
            write!(out, "{sep}{}", serde_json::to_string(e)?)?;
        }
        if !self.entries.is_empty() {
            writeln!(out)?;
        }
        writeln!(out, "]}}")
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 json")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_iotse(&self) -> Result<IotseTable<BigCount>> {
        let n = self
            .params
            .get("N")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Parse("params.N missing".into()))?;
        let mut table = IotseTable::new(n as usize);
        for e in &self.entries {
            let [a_i, a_o, b] = e.key[..] else {
                return Err(Error::Parse(format!(
                    "iotse key {:?} must have 3 parts",
                    e.key
                )));
            };
            let v = BigUint::from_str(&e.value).map_err(|err| Error::Parse(err.to_string()))?;
            table.entries.insert((a_i, a_o, b), v);
        }
        Ok(table)
    }

    pub fn to_ensemble(&self) -> Result<BTreeMap<TrappingSetClass, ExactRatio>> {
        self.entries
            .iter()
            .map(|e| {
                let [a, b] = e.key[..] else {
                    return Err(Error::Parse(format!(
                        "ensemble key {:?} must have 2 parts",
                        e.key
                    )));
                };
                Ok((TrappingSetClass { a, b }, parse_ratio(&e.value)?))
            })
            .collect()
    }
}

pub fn parse_ratio(s: &str) -> Result<ExactRatio> {
    let bad = |e: num_bigint::ParseBigIntError| Error::Parse(format!("{s:?}: {e}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = BigInt::from_str(d).map_err(bad)?;
            if d == BigInt::from(0) {
                return Err(Error::Parse(format!("{s:?} has a zero denominator")));
            }
            Ok(BigRational::new(BigInt::from_str(n).map_err(bad)?, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(bad)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accumulator::acc_iotse_table;
    use crate::ensemble::{ensemble_table, Ceilings, EnsembleConfig};
    use proptest::prelude::*;

    fn params(pairs: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(0.1), "0.1");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(-2.5), "-2.5");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig9(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_sig9(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig9(f64::NAN), "nan");
        assert_eq!(fmt_sig9(0.0001234567891), "0.000123456789");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        emit_sweep_csv(&mut buf, "q=3 L=2", 2, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# q=3 L=2\nalpha,beta,r,r_clamped,omega,alpha_o_1,beta_1,mu_1,nu_1,alpha_o_2,beta_2,mu_2,nu_2\n"
        );
        let row = SweepRow::from_point(0.1, 0.01, 3, None);
        assert_eq!(row.fields().len(), 5 + 4 * 3);
        assert_eq!(row.r, f64::NEG_INFINITY);
    }

    #[test]
    fn iotse_json_example() {
        let t = acc_iotse_table(1).unwrap();
        let doc = TableDoc::iotse(&t, params(&[("N", 1.into()), ("mode", "exact".into())]));
        let text = doc.to_json();
        assert_eq!(
            text,
            "{\"kind\":\"iotse\",\"params\":{\"N\":1,\"mode\":\"exact\"},\"entries\":[\n\
             {\"key\":[0,0,0],\"value\":\"1\"},\n{\"key\":[1,0,1],\"value\":\"1\"}\n]}\n"
        );
        let back = TableDoc::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_iotse().unwrap(), t);
    }

    #[test]
    fn ensemble_json_round_trip() {
        let c = EnsembleConfig::new(2, 2, 2).unwrap();
        let table = ensemble_table(&c, &Ceilings::default()).unwrap();
        let doc = TableDoc::ensemble(
            &table,
            params(&[("q", 2.into()), ("K", 2.into()), ("L", 2.into())]),
        );
        let text = doc.to_json();
        assert!(text.contains("/"), "expected fractional averages");
        assert_eq!(
            TableDoc::parse(&text).unwrap().to_ensemble().unwrap(),
            table
        );

        let c1 = EnsembleConfig::new(2, 2, 1).unwrap();
        let doc1 = TableDoc::ensemble(
            &ensemble_table(&c1, &Ceilings::default()).unwrap(),
            BTreeMap::new(),
        );
        assert!(doc1.to_json().contains("{\"key\":[1,2],\"value\":\"5\"}"));
    }

    #[test]
    fn empty_table_json() {
        let doc = TableDoc::new("iotse", BTreeMap::new(), vec![]);
        let text = doc.to_json();
        assert_eq!(text, "{\"kind\":\"iotse\",\"params\":{},\"entries\":[]}\n");
        assert_eq!(TableDoc::parse(&text).unwrap(), doc);
    }

    #[test]
    fn ratio_parse_errors() {
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
        assert_eq!(
            parse_ratio("6/4").unwrap(),
            BigRational::new(3.into(), 2.into())
        );
    }

    proptest! {
        #[test]
        fn sig9_parses_back_within_precision(x in -1e12f64..1e12, e in -20i32..20) {
            let v = x * 10f64.powi(e);
            let s = fmt_sig9(v);
            let back: f64 = s.parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-9 * v.abs().max(f64::MIN_POSITIVE));
        }

        #[test]
        fn ensemble_docs_round_trip(entries in proptest::collection::btree_map(
            (0usize..20, 0usize..20), (0i64..1000, 1i64..1000), 0..30)) {
            let table: BTreeMap<TrappingSetClass, ExactRatio> = entries
                .into_iter()
                .map(|((a, b), (n, d))| (TrappingSetClass { a, b }, BigRational::new(n.into(), d.into())))
                .collect();
            let doc = TableDoc::ensemble(&table, BTreeMap::new());
            prop_assert_eq!(TableDoc::parse(&doc.to_json()).unwrap().to_ensemble().unwrap(), table);
        }
    }
}
