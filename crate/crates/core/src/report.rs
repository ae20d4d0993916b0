//! Deterministic text output: canonical JSON and CSV number formatting.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// A float with 17 significant digits (round-trips exactly); non-finite
/// values print as `NaN`/`inf` in CSV.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Serialize with sorted object keys, floats at 17 significant digits,
/// two-space indentation and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&fmt_f64(x));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items
                .iter()
                .all(|x| matches!(x, Value::Number(_) | Value::Null | Value::Bool(_)));
            if flat {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, x, level + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], level + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// Join floats into one CSV row.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let v = json!({"b": 0.1, "a": [1, 2.5], "c": {"z": true, "y": null}});
        let s = to_canonical_json(&v).unwrap();
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("[1, 2.5000000000000000e0]"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
        assert_eq!(back["c"]["y"], Value::Null);
    }

    #[test]
    fn non_finite_becomes_null() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        let s = to_canonical_json(&S { x: f64::INFINITY }).unwrap();
        assert!(s.contains("null"));
    }

    #[test]
    fn csv_row_round_trips() {
        let row = csv_row(&[std::f64::consts::PI, -1e-300, 0.0]);
        let parsed: Vec<f64> = row.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(parsed, vec![std::f64::consts::PI, -1e-300, 0.0]);
    }
}
