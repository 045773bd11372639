//! Sweep records and their CSV/JSON encodings.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::{CliError, OutputFormat};

/// Column names owned by the record itself; parameters may not use them.
pub const RESERVED: [&str; 5] = ["metric", "value", "seed", "step", "wall_time_s"];

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    fn rank(&self) -> u8 {
        match self {
            ParamValue::Int(_) => 0,
            ParamValue::Float(_) => 1,
            ParamValue::Text(_) => 2,
        }
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ParamValue::Int(a), ParamValue::Int(b)) => a.cmp(b),
            (ParamValue::Float(a), ParamValue::Float(b)) => a.total_cmp(b),
            (ParamValue::Text(a), ParamValue::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    fn to_csv(&self) -> String {
        match self {
            ParamValue::Int(i) => i.to_string(),
            ParamValue::Float(x) => format_sig(*x),
            ParamValue::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Float(x)
    }
}

impl From<usize> for ParamValue {
    fn from(x: usize) -> Self {
        ParamValue::Int(x as i64)
    }
}

impl From<i64> for ParamValue {
    fn from(x: i64) -> Self {
        ParamValue::Int(x)
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Text(s.to_string())
    }
}

/// One `(parameters → metric)` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub params: BTreeMap<String, ParamValue>,
    pub metric: String,
    pub value: f64,
    pub seed: Option<u64>,
    /// Integrator step (1/J) when the metric came from time evolution.
    pub step: Option<f64>,
    pub wall_time: Option<f64>,
}

impl SweepRecord {
    pub fn new(params: &BTreeMap<String, ParamValue>, metric: &str, value: f64) -> Self {
        Self {
            params: params.clone(),
            metric: metric.to_string(),
            value,
            seed: None,
            step: None,
            wall_time: None,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn param(&self, key: &str) -> Option<&ParamValue> {
        self.params.get(key)
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        match self.params.get(key)? {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(x) => Some(*x),
            ParamValue::Text(_) => None,
        }
    }

    pub fn param_text(&self, key: &str) -> Option<&str> {
        match self.params.get(key)? {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Deterministic order: parameters first, then metric and seed.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let mut a = self.params.iter();
        let mut b = other.params.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => break,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((ka, va)), Some((kb, vb))) => {
                    let o = ka.cmp(kb).then_with(|| va.total_cmp(vb));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
            }
        }
        self.metric
            .cmp(&other.metric)
            .then_with(|| self.seed.cmp(&other.seed))
            .then_with(|| self.value.total_cmp(&other.value))
    }
}

pub fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(SweepRecord::canonical_cmp);
}

/// Twelve significant digits, shortest representation of the rounded value.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn columns(records: &[SweepRecord], with_wall_time: bool) -> Vec<String> {
    let mut params: Vec<String> = records
        .iter()
        .flat_map(|r| r.params.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    params.extend(["metric", "value", "seed", "step"].map(String::from));
    if with_wall_time {
        params.push("wall_time_s".into());
    }
    params
}

fn check_reserved(records: &[SweepRecord]) -> Result<(), CliError> {
    for r in records {
        if let Some(k) = r.params.keys().find(|k| RESERVED.contains(&k.as_str())) {
            return Err(CliError::Config(format!(
                "parameter name '{k}' is reserved"
            )));
        }
    }
    Ok(())
}

/// Writes records as CSV. `header` becomes a leading `#` comment line.
pub fn write_csv<W: Write>(
    records: &[SweepRecord],
    header: Option<&str>,
    with_wall_time: bool,
    mut out: W,
) -> Result<(), CliError> {
    check_reserved(records)?;
    if let Some(h) = header {
        writeln!(out, "# {h}")?;
    }
    let cols = columns(records, with_wall_time);
    let n_params = cols.len() - if with_wall_time { 5 } else { 4 };
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(&cols).map_err(io)?;
    for r in records {
        let mut row: Vec<String> = cols[..n_params]
            .iter()
            .map(|c| r.params.get(c).map(ParamValue::to_csv).unwrap_or_default())
            .collect();
        row.push(r.metric.clone());
        row.push(format_sig(r.value));
        row.push(r.seed.map(|s| s.to_string()).unwrap_or_default());
        row.push(r.step.map(format_sig).unwrap_or_default());
        if with_wall_time {
            row.push(r.wall_time.map(format_sig).unwrap_or_default());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn number(x: f64) -> Result<Value, CliError> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| CliError::Config(format!("non-finite value {x} cannot be encoded")))
}

pub fn to_json_value(records: &[SweepRecord], with_wall_time: bool) -> Result<Value, CliError> {
    check_reserved(records)?;
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let mut obj = Map::new();
        for (k, v) in &r.params {
            let v = match v {
                ParamValue::Int(i) => Value::from(*i),
                ParamValue::Float(x) => number(*x)?,
                ParamValue::Text(s) => Value::from(s.clone()),
            };
            obj.insert(k.clone(), v);
        }
        obj.insert("metric".into(), Value::from(r.metric.clone()));
        obj.insert("value".into(), number(r.value)?);
        obj.insert(
            "seed".into(),
            r.seed.map(Value::from).unwrap_or(Value::Null),
        );
        obj.insert(
            "step".into(),
            r.step.map(number).transpose()?.unwrap_or(Value::Null),
        );
        if with_wall_time {
            if let Some(t) = r.wall_time {
                obj.insert("wall_time_s".into(), number(t)?);
            }
        }
        rows.push(Value::Object(obj));
    }
    Ok(Value::Array(rows))
}

pub fn write_json<W: Write>(
    records: &[SweepRecord],
    with_wall_time: bool,
    mut out: W,
) -> Result<(), CliError> {
    let v = to_json_value(records, with_wall_time)?;
    serde_json::to_writer_pretty(&mut out, &v)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    writeln!(out)?;
    Ok(())
}

pub fn from_json(text: &str) -> Result<Vec<SweepRecord>, CliError> {
    let bad = |m: &str| CliError::Config(format!("malformed record JSON: {m}"));
    let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let rows = v.as_array().ok_or_else(|| bad("expected an array"))?;
    rows.iter()
        .map(|row| {
            let obj = row.as_object().ok_or_else(|| bad("expected an object"))?;
            let mut params = BTreeMap::new();
            let mut rec = SweepRecord {
                params: BTreeMap::new(),
                metric: String::new(),
                value: 0.0,
                seed: None,
                step: None,
                wall_time: None,
            };
            for (k, v) in obj {
                match k.as_str() {
                    "metric" => rec.metric = v.as_str().ok_or_else(|| bad("metric"))?.to_string(),
                    "value" => rec.value = v.as_f64().ok_or_else(|| bad("value"))?,
                    "seed" => {
                        rec.seed = if v.is_null() {
                            None
                        } else {
                            Some(v.as_u64().ok_or_else(|| bad("seed"))?)
                        }
                    }
                    "step" => {
                        rec.step = if v.is_null() {
                            None
                        } else {
                            Some(v.as_f64().ok_or_else(|| bad("step"))?)
                        }
                    }
                    "wall_time_s" => {
                        rec.wall_time = Some(v.as_f64().ok_or_else(|| bad("wall_time_s"))?)
                    }
                    _ => {
                        let p = match v {
                            Value::String(s) => ParamValue::Text(s.clone()),
                            Value::Number(n) if n.is_i64() => ParamValue::Int(n.as_i64().unwrap()),
                            Value::Number(n) if n.is_f64() => {
                                ParamValue::Float(n.as_f64().unwrap())
                            }
                            _ => return Err(bad(k)),
                        };
                        params.insert(k.clone(), p);
                    }
                }
            }
            rec.params = params;
            Ok(rec)
        })
        .collect()
}

/// Writes in the requested format.
pub fn write_records<W: Write>(
    records: &[SweepRecord],
    format: OutputFormat,
    header: Option<&str>,
    with_wall_time: bool,
    out: W,
) -> Result<(), CliError> {
    match format {
        OutputFormat::Csv => write_csv(records, header, with_wall_time, out),
        OutputFormat::Json => write_json(records, with_wall_time, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SweepRecord> {
        let mut p = BTreeMap::new();
        p.insert("t_max".to_string(), ParamValue::Float(2.0));
        p.insert("distance".to_string(), ParamValue::Int(5));
        p.insert("method".to_string(), ParamValue::Text("full".into()));
        vec![
            SweepRecord::new(&p, "fidelity", 0.123456789012345).with_step(0.02),
            SweepRecord::new(&p, "norm_drift", 1.5e-14).with_seed(Some(u64::MAX)),
        ]
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(0.123456789012345), "0.123456789012");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(-2.5e-14), "-2.5e-14");
        assert_eq!(format_sig(123456.0), "123456");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&sample(), Some("hdr"), false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# hdr");
        assert_eq!(lines[1], "distance,method,t_max,metric,value,seed,step");
        assert_eq!(lines[2], "5,full,2,fidelity,0.123456789012,,0.02");
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let recs = sample();
        let mut buf = Vec::new();
        write_json(&recs, true, &mut buf).unwrap();
        let back = from_json(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn reserved_names_rejected() {
        let mut p = BTreeMap::new();
        p.insert("value".to_string(), ParamValue::Int(1));
        let r = vec![SweepRecord::new(&p, "x", 1.0)];
        assert!(write_csv(&r, None, false, Vec::new()).is_err());
    }

    #[test]
    fn canonical_order_is_permutation_invariant() {
        let mut a = sample();
        let mut b: Vec<_> = a.iter().rev().cloned().collect();
        sort_records(&mut a);
        sort_records(&mut b);
        assert_eq!(a, b);
    }
}
