//! Deterministic JSON reports: fixed key order, floats at 17 significant
//! digits so values round-trip exactly.

use std::fmt::Write as _;

pub enum Value {
    Str(String),
    Float(f64),
    Int(i64),
    Bool(bool),
    List(Vec<Value>),
    Object(Vec<(String, Value)>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }
}

fn escape(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Str(s) => escape(s, out),
        Value::Float(x) => {
            if x.is_finite() {
                let _ = write!(out, "{x:.16e}");
            } else {
                // JSON has no infinities; stringify the exceptional values.
                escape(&x.to_string(), out);
            }
        }
        Value::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::List(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent + 1));
                write_value(item, indent + 1, out);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(fields) => {
            if fields.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (k, (key, item)) in fields.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent + 1));
                escape(key, out);
                out.push_str(": ");
                write_value(item, indent + 1, out);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Top-level report envelope; key order is part of the schema.
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub payload: Value,
    pub seconds: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let fields = vec![
            ("schema_version".into(), Value::str("1")),
            ("command".into(), Value::str(&self.command)),
            ("inputs_digest".into(), Value::str(&self.inputs_digest)),
            (
                "payload".into(),
                Value::Object(match &self.payload {
                    Value::Object(f) => f.iter().map(|(k, v)| (k.clone(), clone_value(v))).collect(),
                    other => vec![("value".into(), clone_value(other))],
                }),
            ),
            ("seconds".into(), Value::Float(self.seconds)),
            ("seed".into(), Value::Int(self.seed as i64)),
            (
                "warnings".into(),
                Value::List(self.warnings.iter().map(Value::str).collect()),
            ),
        ];
        let mut out = String::new();
        write_value(&Value::Object(fields), 0, &mut out);
        out.push('\n');
        out
    }
}

fn clone_value(v: &Value) -> Value {
    match v {
        Value::Str(s) => Value::Str(s.clone()),
        Value::Float(x) => Value::Float(*x),
        Value::Int(i) => Value::Int(*i),
        Value::Bool(b) => Value::Bool(*b),
        Value::List(items) => Value::List(items.iter().map(clone_value).collect()),
        Value::Object(fields) => {
            Value::Object(fields.iter().map(|(k, v)| (k.clone(), clone_value(v))).collect())
        }
    }
}

/// FNV-1a over canonical input bytes; stable across runs and platforms.
pub fn digest(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    format!("fnv1a:{hash:016x}")
}
