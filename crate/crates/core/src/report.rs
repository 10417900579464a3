//! Versioned JSON reports with a hash over their reproducible part, and CSV
//! spectra tables.

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::catalog::{Multiplicity, OmegaValue};
use crate::error::{OmegaError, Result};
use crate::forms::levels;

pub const SCHEMA: &str = "omega-report/1";

/// Keys whose values vary between identical runs.
pub const VOLATILE_KEYS: [&str; 1] = ["wall_time_s"];

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub config: Value,
    pub result: Value,
    /// sha256 of the canonical JSON of schema, command, config and result.
    pub stable_hash: String,
    /// Timings pulled out of `result`, keyed by their JSON path.
    pub timings: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, config: impl Serialize, result: impl Serialize) -> Result<Self> {
        let config = to_value(config)?;
        let mut result = to_value(result)?;
        let mut timings = Map::new();
        extract_volatile(&mut result, String::new(), &mut timings);
        let stable_hash = stable_hash(&json!({
            "schema": SCHEMA,
            "command": command,
            "config": config,
            "result": result,
        }));
        Ok(Report {
            schema: SCHEMA.to_string(),
            command: command.to_string(),
            config,
            result,
            stable_hash,
            timings,
        })
    }

    pub fn with_timing(mut self, key: &str, seconds: f64) -> Self {
        self.timings.insert(key.to_string(), json!(seconds));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize") + "\n"
    }
}

fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| OmegaError::invalid(format!("unserializable report: {e}")))
}

fn extract_volatile(v: &mut Value, path: String, out: &mut Map<String, Value>) {
    match v {
        Value::Object(map) => {
            for key in VOLATILE_KEYS {
                if let Some(t) = map.remove(key) {
                    let at = if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
                    out.insert(at, t);
                }
            }
            for (k, child) in map.iter_mut() {
                let at = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                extract_volatile(child, at, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter_mut().enumerate() {
                extract_volatile(child, format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

/// Hex sha256 of the compact JSON text. Object keys serialize sorted, so
/// equal values hash equally.
pub fn stable_hash(v: &Value) -> String {
    let text = serde_json::to_string(v).expect("JSON values serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub k: usize,
    pub value: f64,
    pub multiplicity: String,
    pub witness: String,
}

pub fn rows_from_omega(values: &[OmegaValue]) -> Vec<SpectrumRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| SpectrumRow {
            k: i + 1,
            value: v.value,
            multiplicity: match v.multiplicity {
                Multiplicity::Finite(m) => m.to_string(),
                Multiplicity::Unresolved => "unresolved".into(),
            },
            witness: v.witness.clone(),
        })
        .collect()
}

/// Groups a descending value list into levels; the witness is the index
/// range the level covers.
pub fn rows_from_values(values: &[f64], rel_tol: f64) -> Vec<SpectrumRow> {
    let mut first = 1;
    levels(values, rel_tol)
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let last = first + l.multiplicity - 1;
            let row = SpectrumRow {
                k: i + 1,
                value: l.value,
                multiplicity: l.multiplicity.to_string(),
                witness: format!("indices {first}-{last}"),
            };
            first = last + 1;
            row
        })
        .collect()
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timings_do_not_change_the_hash() {
        let a = Report::new("x", json!({"n": 1}), json!({"v": [1.0], "wall_time_s": 0.5})).unwrap();
        let b = Report::new("x", json!({"n": 1}), json!({"v": [1.0], "wall_time_s": 9.0})).unwrap();
        assert_eq!(a.stable_hash, b.stable_hash);
        assert_eq!(a.timings["wall_time_s"], 0.5);
        let c = Report::new("x", json!({"n": 2}), json!({"v": [1.0]})).unwrap();
        assert_ne!(a.stable_hash, c.stable_hash);
    }

    #[test]
    fn nested_timings_keep_their_path() {
        let r = Report::new("v", json!({}), json!([{"suite": "a", "wall_time_s": 1.0}])).unwrap();
        assert_eq!(r.timings["[0].wall_time_s"], 1.0);
        assert!(r.result[0].get("wall_time_s").is_none());
    }

    #[test]
    fn key_order_does_not_matter() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":2}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":2,"a":1}"#).unwrap();
        assert_eq!(stable_hash(&a), stable_hash(&b));
    }

    #[test]
    fn csv_has_the_table_columns() {
        let rows = rows_from_values(&[0.5, 0.5, 0.5, 1.0 / 6.0], 1e-12);
        let text = spectrum_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,value,multiplicity,witness"));
        assert_eq!(lines.next(), Some("1,0.5,3,indices 1-3"));
        assert_eq!(rows[1].witness, "indices 4-4");
    }
}
