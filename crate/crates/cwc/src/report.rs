//! Versioned JSON report envelope and tolerant report comparison.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use cwc_core::pipeline::REPORT_SCHEMA_VERSION;

/// Keys whose values vary between otherwise identical runs.
pub const VOLATILE_KEYS: &[&str] = &["timing"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub result: Value,
}

impl Envelope {
    pub fn new(command: &str, config_hash: String, master_seed: u64, threads: Option<usize>, result: Value) -> Self {
        Self { schema_version: REPORT_SCHEMA_VERSION, command: command.into(), config_hash, master_seed, threads, result }
    }
}

/// Structural equality with numbers compared to relative tolerance `rel`,
/// skipping [`VOLATILE_KEYS`]. Returns the path of the first mismatch.
pub fn compare(a: &Value, b: &Value, rel: f64) -> Result<(), String> {
    compare_at(a, b, rel, "$")
}

fn compare_at(a: &Value, b: &Value, rel: f64, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            let scale = x.abs().max(y.abs());
            if x == y || (x - y).abs() <= rel * scale {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{path}: length {} vs {}", x.len(), y.len()));
            }
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                compare_at(u, v, rel, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (Value::Object(x), Value::Object(y)) => {
            let keys = |m: &serde_json::Map<String, Value>| {
                let mut k: Vec<String> = m.keys().filter(|k| !VOLATILE_KEYS.contains(&k.as_str())).cloned().collect();
                k.sort();
                k
            };
            let (kx, ky) = (keys(x), keys(y));
            if kx != ky {
                return Err(format!("{path}: keys {kx:?} vs {ky:?}"));
            }
            for k in kx {
                compare_at(&x[&k], &y[&k], rel, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tolerance_and_volatile_keys() {
        let a = json!({"x": 1.0, "y": [1, 2], "timing": [0.1]});
        let b = json!({"x": 1.0 + 1e-12, "y": [1, 2], "timing": [9.0]});
        compare(&a, &b, 1e-9).unwrap();
        let c = json!({"x": 1.1, "y": [1, 2]});
        assert!(compare(&a, &c, 1e-9).unwrap_err().starts_with("$.x"));
        assert!(compare(&json!({"s": "a"}), &json!({"s": "b"}), 1.0).is_err());
        assert!(compare(&json!([1]), &json!([1, 2]), 1.0).is_err());
    }
}
