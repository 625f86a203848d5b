//! CSV and JSON serialisation. Infinite values are written as `"inf"`.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rates::{GridPoint, SweepResult};

pub fn ser_real<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_none()
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn ser_opt_real<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_real(v, s),
        None => s.serialize_none(),
    }
}

struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_real(&self.0, s)
    }
}

pub fn ser_real_map<K: Display, S: Serializer>(
    map: &BTreeMap<K, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut m = s.serialize_map(Some(map.len()))?;
    for (k, v) in map {
        m.serialize_entry(&k.to_string(), &Real(*v))?;
    }
    m.end()
}

/// CSV cell for a real number.
pub fn cell(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

/// Divergence columns: `(header, metric key)`.
fn metric_columns(dp_orders: &[u32]) -> Vec<(String, String)> {
    let mut cols: Vec<(String, String)> = [("H2", "h2"), ("H", "h"), ("TV", "tv"), ("KL", "kl")]
        .iter()
        .map(|(h, k)| (h.to_string(), k.to_string()))
        .collect();
    let mut orders: Vec<u32> = vec![2, 3];
    orders.extend(dp_orders.iter().filter(|p| **p > 3));
    orders.sort_unstable();
    orders.dedup();
    cols.extend(orders.iter().map(|p| (format!("D{p}"), format!("d{p}"))));
    cols
}

/// Header of the sweep CSV for the given extra `D_p` orders.
pub fn csv_header(dp_orders: &[u32]) -> Vec<String> {
    let cols = metric_columns(dp_orders);
    let mut h: Vec<String> = ["v", "t", "s_t", "c_t", "abs_A"].iter().map(|s| s.to_string()).collect();
    h.extend(cols.iter().map(|(name, _)| name.clone()));
    h.push("ratio_sup".into());
    h.extend(
        cols.iter()
            .filter(|(_, key)| key != "h")
            .map(|(name, _)| format!("quad_error_{name}")),
    );
    h.push("status".into());
    h
}

fn csv_row(p: &GridPoint, dp_orders: &[u32]) -> Vec<String> {
    let cols = metric_columns(dp_orders);
    let mut row = vec![cell(p.v), cell(p.t), cell(p.s_t), cell(p.c_t), cell(p.abs_a)];
    row.extend(cols.iter().map(|(_, key)| opt_cell(p.metric(key))));
    row.push(opt_cell(p.ratio_sup));
    for (_, key) in cols.iter().filter(|(_, key)| key != "h") {
        let err = p.report.as_ref().and_then(|r| r.quad_error.get(key.as_str()).copied());
        row.push(opt_cell(err));
    }
    row.push(p.failure.as_ref().map_or("ok".to_string(), |f| format!("failed: {f}")));
    row
}

/// Rows of grid points as CSV text.
pub fn points_csv(points: &[GridPoint], dp_orders: &[u32]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
    w.write_record(csv_header(dp_orders)).map_err(io)?;
    for p in points {
        w.write_record(csv_row(p, dp_orders)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sweep_csv(sr: &SweepResult) -> Result<String> {
    points_csv(&sr.grid, &sr.metrics.dp_orders())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("json output: {e}")))?;
    s.push('\n');
    Ok(s)
}
