use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::config::Format;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    B(bool),
    I(i64),
    F(f64),
    S(String),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::F(v)
    }
}
impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::I(v as i64)
    }
}
impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::I(v as i64)
    }
}
impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::B(v)
    }
}
impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::S(v.into())
    }
}
impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::S(v)
    }
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn fmt_f64(v: f64) -> String {
    let r = round12(v);
    if r.is_nan() {
        "NaN".into()
    } else if r.is_infinite() {
        if r > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        serde_json::to_string(&r).expect("finite float")
    }
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::B(b) => Json::Bool(*b),
            Value::I(i) => Json::from(*i),
            Value::F(f) if f.is_finite() => Json::from(round12(*f)),
            // JSON has no infinities
            Value::F(f) => Json::String(fmt_f64(*f)),
            Value::S(s) => Json::String(s.clone()),
        }
    }

    fn from_json(v: &Json) -> Value {
        match v {
            Json::Bool(b) => Value::B(*b),
            Json::Number(n) if n.is_i64() => Value::I(n.as_i64().unwrap()),
            Json::Number(n) => Value::F(n.as_f64().unwrap_or(f64::NAN)),
            Json::String(s) => match s.as_str() {
                "inf" => Value::F(f64::INFINITY),
                "-inf" => Value::F(f64::NEG_INFINITY),
                "NaN" => Value::F(f64::NAN),
                _ => Value::S(s.clone()),
            },
            other => Value::S(other.to_string()),
        }
    }

    fn to_cell(&self) -> String {
        match self {
            Value::B(b) => b.to_string(),
            Value::I(i) => i.to_string(),
            Value::F(f) => fmt_f64(*f),
            Value::S(s) => s.clone(),
        }
    }
}

/// One row of results. Metrics keep insertion order, which fixes the
/// column order of the emitted tables.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub id: String,
    pub digest: String,
    pub metrics: Vec<(String, Value)>,
    /// None for informational rows
    pub pass: Option<bool>,
    pub wall_ms: Option<f64>,
}

impl ResultRecord {
    pub fn new(experiment: &str, id: impl Into<String>, digest: &str) -> Self {
        ResultRecord {
            experiment: experiment.into(),
            id: id.into(),
            digest: digest.into(),
            metrics: Vec::new(),
            pass: None,
            wall_ms: None,
        }
    }

    pub fn metric(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.push(name, v);
        self
    }

    pub fn push(&mut self, name: &str, v: impl Into<Value>) {
        self.metrics.push((name.to_string(), v.into()));
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn get_f64(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            Value::F(f) => Some(*f),
            Value::I(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// Conjunction of all threshold checks; rows without a check count as passing.
pub fn all_pass(records: &[ResultRecord]) -> bool {
    records.iter().all(|r| r.pass != Some(false))
}

fn columns(records: &[ResultRecord]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in records {
        for (k, _) in &r.metrics {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

const FIXED: [&str; 3] = ["experiment", "id", "digest"];

pub fn to_csv(records: &[ResultRecord], timing: bool) -> Result<String> {
    let cols = columns(records);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(cols.iter().cloned());
    header.push("pass".into());
    if timing {
        header.push("wall_ms".into());
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.experiment.clone(), r.id.clone(), r.digest.clone()];
        for c in &cols {
            row.push(r.get(c).map(Value::to_cell).unwrap_or_default());
        }
        row.push(r.pass.map(|p| p.to_string()).unwrap_or_default());
        if timing {
            row.push(r.wall_ms.map(fmt_f64).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json(records: &[ResultRecord], timing: bool) -> String {
    let arr: Vec<Json> = records
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("experiment".into(), Json::String(r.experiment.clone()));
            m.insert("id".into(), Json::String(r.id.clone()));
            m.insert("digest".into(), Json::String(r.digest.clone()));
            let metrics: Map<String, Json> = r.metrics.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
            m.insert("metrics".into(), Json::Object(metrics));
            m.insert("pass".into(), r.pass.map_or(Json::Null, Json::Bool));
            if timing {
                m.insert(
                    "wall_ms".into(),
                    r.wall_ms.map_or(Json::Null, |w| Json::from(round12(w))),
                );
            }
            Json::Object(m)
        })
        .collect();
    serde_json::to_string_pretty(&arr).expect("records serialize") + "\n"
}

pub fn parse_json(s: &str) -> Result<Vec<ResultRecord>> {
    let v: Vec<Map<String, Json>> = serde_json::from_str(s)?;
    let field = |m: &Map<String, Json>, k: &str| m.get(k).and_then(|x| x.as_str()).unwrap_or_default().to_string();
    Ok(v.into_iter()
        .map(|m| ResultRecord {
            experiment: field(&m, "experiment"),
            id: field(&m, "id"),
            digest: field(&m, "digest"),
            metrics: m
                .get("metrics")
                .and_then(|x| x.as_object())
                .map(|o| o.iter().map(|(k, v)| (k.clone(), Value::from_json(v))).collect())
                .unwrap_or_default(),
            pass: m.get("pass").and_then(|x| x.as_bool()),
            wall_ms: m.get("wall_ms").and_then(|x| x.as_f64()),
        })
        .collect())
}

pub fn render(records: &[ResultRecord], format: Format, timing: bool) -> Result<String> {
    match format {
        Format::Csv => to_csv(records, timing),
        Format::Json => Ok(to_json(records, timing)),
    }
}

/// Writes (overwriting) the rendered records.
pub fn emit(records: &[ResultRecord], format: Format, path: &Path, timing: bool) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, render(records, format, timing)?)?;
    Ok(())
}

/// FNV-1a, 64 bit, as 16 hex digits. Used only to label inputs.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
