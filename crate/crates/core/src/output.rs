//! Report serialization. Floats are written with 17 significant digits so
//! that reports round-trip exactly and diff cleanly.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::mesh::FeFunction;

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with fixed-precision floats; non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Numeric(format!("serialization failed: {e}")))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                match n.as_f64() {
                    Some(x) if x.is_finite() => out.push_str(&format_f64(x)),
                    _ => out.push_str("null"),
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Vertex coordinates and nodal values, columns `x,y,u`.
pub fn solution_csv(u: &FeFunction) -> String {
    let mut s = String::from("x,y,u\n");
    for (x, v) in u.mesh().vertices().iter().zip(u.values()) {
        s.push_str(&format!("{},{},{}\n", format_f64(x[0]), format_f64(x[1]), format_f64(*v)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use std::sync::Arc;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        n: usize,
        bad: f64,
        name: String,
        list: Vec<f64>,
        none: Option<f64>,
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json(&Sample {
            a: 0.1,
            n: 3,
            bad: f64::NAN,
            name: "q\"x".into(),
            list: vec![],
            none: None,
        })
        .unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"bad\": null"));
        assert!(s.contains("\"name\": \"q\\\"x\""));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn solution_csv_rows() {
        let m = Arc::new(Mesh::unit_square(2, 2).unwrap());
        let u = FeFunction::interpolate(&m, |x| x[0]);
        let csv = solution_csv(&u);
        assert!(csv.starts_with("x,y,u\n"));
        assert_eq!(csv.lines().count(), 10);
    }
}
