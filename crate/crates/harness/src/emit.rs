//! CSV and JSON result tables: one row per `(n, k, m, metric)`.

use std::io::Write;
use std::path::Path;

use jtsupport_core::experiment::PointSummary;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 16] = [
    "n",
    "k",
    "m",
    "sigma_sq",
    "delta",
    "metric",
    "param",
    "trials",
    "seed",
    "err_rate",
    "se",
    "omega0_rate",
    "omegaIc_rate",
    "omegaJ_rate",
    "union_bound",
    "vacuous_flag",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_sq: f64,
    pub delta: f64,
    pub metric: String,
    pub param: f64,
    pub trials: usize,
    pub seed: u64,
    pub err_rate: f64,
    pub se: f64,
    pub omega0_rate: f64,
    #[serde(rename = "omegaIc_rate")]
    pub omega_ic_rate: f64,
    #[serde(rename = "omegaJ_rate")]
    pub omega_j_rate: f64,
    pub union_bound: Option<f64>,
    pub vacuous_flag: bool,
}

/// Rows in canonical `(n, k, m, metric)` order.
pub fn rows(points: &[PointSummary]) -> Vec<Row> {
    let mut rows: Vec<Row> = points
        .iter()
        .flat_map(|p| {
            p.metrics.iter().map(move |ms| Row {
                n: p.n,
                k: p.k,
                m: p.m,
                sigma_sq: p.sigma_sq,
                delta: p.delta,
                metric: ms.metric.name().to_string(),
                param: ms.metric.param(),
                trials: p.trials,
                seed: p.seed,
                err_rate: ms.err_rate,
                se: ms.se,
                omega0_rate: p.omega0_rate,
                omega_ic_rate: p.omega_ic_rate,
                omega_j_rate: p.omega_j_rate,
                union_bound: ms.union_bound,
                vacuous_flag: ms.vacuous,
            })
        })
        .collect();
    rows.sort_by(|a, b| (a.n, a.k, a.m, &a.metric).cmp(&(b.n, b.k, b.m, &b.metric)));
    rows
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn record(r: &Row) -> [String; 16] {
    [
        r.n.to_string(),
        r.k.to_string(),
        r.m.to_string(),
        fmt_f64(r.sigma_sq),
        fmt_f64(r.delta),
        r.metric.clone(),
        fmt_f64(r.param),
        r.trials.to_string(),
        r.seed.to_string(),
        fmt_f64(r.err_rate),
        fmt_f64(r.se),
        fmt_f64(r.omega0_rate),
        fmt_f64(r.omega_ic_rate),
        fmt_f64(r.omega_j_rate),
        r.union_bound.map(fmt_f64).unwrap_or_default(),
        u8::from(r.vacuous_flag).to_string(),
    ]
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn to_json_string(rows: &[Row]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"
}

pub fn render(rows: &[Row], format: Format) -> String {
    match format {
        Format::Csv => to_csv_string(rows),
        Format::Json => to_json_string(rows),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
    let raw = rec.get(i).ok_or_else(|| format!("missing column {}", HEADER[i]))?;
    raw.parse().map_err(|_| format!("bad value `{raw}` in column {}", HEADER[i]))
}

pub fn parse_csv(text: &str) -> std::result::Result<Vec<Row>, String> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(HEADER) {
        return Err("unexpected header".into());
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let union = rec.get(14).unwrap_or_default();
            Ok(Row {
                n: field(&rec, 0)?,
                k: field(&rec, 1)?,
                m: field(&rec, 2)?,
                sigma_sq: field(&rec, 3)?,
                delta: field(&rec, 4)?,
                metric: field(&rec, 5)?,
                param: field(&rec, 6)?,
                trials: field(&rec, 7)?,
                seed: field(&rec, 8)?,
                err_rate: field(&rec, 9)?,
                se: field(&rec, 10)?,
                omega0_rate: field(&rec, 11)?,
                omega_ic_rate: field(&rec, 12)?,
                omega_j_rate: field(&rec, 13)?,
                union_bound: if union.is_empty() { None } else { Some(field(&rec, 14)?) },
                vacuous_flag: field::<u8>(&rec, 15)? == 1,
            })
        })
        .collect()
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::io("<stdout>", e)),
    }
}
