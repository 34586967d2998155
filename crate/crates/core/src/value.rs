use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueType {
    Number,
    Text,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Number => "Number",
            ValueType::Text => "Text",
        })
    }
}

/// A runtime scalar. Serializes untagged: numbers as JSON numbers, text as
/// JSON strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Number(_) => ValueType::Number,
            Value::Text(_) => ValueType::Text,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            Value::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            Value::Number(_) => None,
        }
    }

    /// Bit-level identity: NaN equals NaN, `0.0` differs from `-0.0`.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => false,
        }
    }

    pub fn default_for(ty: ValueType) -> Value {
        match ty {
            ValueType::Number => Value::Number(0.0),
            ValueType::Text => Value::Text(String::new()),
        }
    }

    /// Parses a literal as written in scripts and `--set` flags: a double-quoted
    /// string, `NaN`/`inf`/`-inf`, or a decimal number. Anything else is text.
    pub fn parse_literal(s: &str) -> Value {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
            return Value::Text(inner.replace("\\\"", "\"").replace("\\\\", "\\"));
        }
        match s {
            "NaN" => Value::Number(f64::NAN),
            "inf" | "+inf" | "Infinity" => Value::Number(f64::INFINITY),
            "-inf" | "-Infinity" => Value::Number(f64::NEG_INFINITY),
            _ => s
                .parse::<f64>()
                .map(Value::Number)
                .unwrap_or_else(|_| Value::Text(s.to_string())),
        }
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Text(t) => write!(f, "{t:?}"),
        }
    }
}
