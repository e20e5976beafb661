//! Deterministic JSON output and serde helpers for reals that may be `+inf`.
//!
//! Objects keep insertion order, floats are written with 17 significant
//! digits, and non-finite reals become the strings `"inf"`, `"-inf"`, `"nan"`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

/// Serialize a real, mapping non-finite values to string sentinels.
pub fn real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(sentinel(*v))
    }
}

/// [`real`] for optional fields.
pub fn real_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => real(x, s),
        None => s.serialize_none(),
    }
}

/// [`real`] for every entry of a map.
pub fn real_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &Real(*v))?;
    }
    map.end()
}

/// [`real`] for every element of a slice.
pub fn real_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Real(*x))?;
    }
    seq.end()
}

/// A real that serializes through [`real`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        real(&self.0, s)
    }
}

fn sentinel(v: f64) -> &'static str {
    if v.is_nan() {
        "nan"
    } else if v > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// Parse a real written either as a number or as a sentinel string.
pub fn parse_real(v: &Value, pointer: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| parse_error(pointer, "number out of range")),
        Value::String(s) => match s.as_str() {
            "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
            "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
            other => other
                .parse()
                .map_err(|_| parse_error(pointer, &format!("expected a real, got {other:?}"))),
        },
        _ => Err(parse_error(pointer, "expected a real")),
    }
}

pub(crate) fn parse_error(pointer: &str, message: &str) -> Error {
    Error::Parse {
        pointer: pointer.to_string(),
        message: message.to_string(),
    }
}

/// Serialize `value` to deterministic, pretty-printed JSON.
pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// Format a finite float with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("\"{}\"", sentinel(x))
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_real(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, indent + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        #[serde(serialize_with = "real")]
        a: f64,
        #[serde(serialize_with = "real")]
        b: f64,
        n: usize,
        z: Vec<f64>,
    }

    #[test]
    fn sentinels_and_digits() {
        let s = to_string(&Sample {
            a: 0.1,
            b: f64::INFINITY,
            n: 3,
            z: vec![],
        })
        .unwrap();
        assert_eq!(s, "{\n  \"a\": 1.0000000000000001e-1,\n  \"b\": \"inf\",\n  \"n\": 3,\n  \"z\": []\n}\n");
    }

    #[test]
    fn round_trip_reals() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02e23] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(parse_real(&Value::String("inf".into()), "/x").unwrap(), f64::INFINITY);
        assert!(parse_real(&Value::Bool(true), "/x").is_err());
    }
}
