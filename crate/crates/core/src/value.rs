//! Closed set of semantic types and the values wrappers coerce native data into.

use std::cmp::Ordering;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticType {
    Text,
    Integer,
    Real,
    Date,
    Boolean,
}

impl SemanticType {
    pub fn is_numeric(self) -> bool {
        matches!(self, SemanticType::Integer | SemanticType::Real)
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticType::Text => "text",
            SemanticType::Integer => "integer",
            SemanticType::Real => "real",
            SemanticType::Date => "date",
            SemanticType::Boolean => "boolean",
        }
    }
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Text(String),
    Integer(i64),
    Real(f64),
    Date(NaiveDate),
    Boolean(bool),
}

pub type Row = Vec<Value>;

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn conforms_to(&self, ty: SemanticType) -> bool {
        matches!(
            (self, ty),
            (Value::Null, _)
                | (Value::Text(_), SemanticType::Text)
                | (Value::Integer(_), SemanticType::Integer)
                | (Value::Real(_), SemanticType::Real)
                | (Value::Date(_), SemanticType::Date)
                | (Value::Boolean(_), SemanticType::Boolean)
        )
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Parse a literal (as written in an utterance or a native record) into `ty`.
    pub fn parse_as(raw: &str, ty: SemanticType) -> Option<Value> {
        let raw = raw.trim();
        match ty {
            SemanticType::Text => Some(Value::Text(raw.to_string())),
            SemanticType::Integer => raw.parse().ok().map(Value::Integer),
            SemanticType::Real => raw
                .parse::<f64>()
                .ok()
                .filter(|r| r.is_finite())
                .map(Value::Real),
            SemanticType::Date => NaiveDate::parse_from_str(raw, "%Y-%m-%d")
                .ok()
                .map(Value::Date),
            SemanticType::Boolean => match raw.to_ascii_lowercase().as_str() {
                "true" | "yes" => Some(Value::Boolean(true)),
                "false" | "no" => Some(Value::Boolean(false)),
                _ => None,
            },
        }
    }

    /// Coerce a JSON field into `ty`. Missing or mistyped fields become null.
    pub fn from_json(v: &serde_json::Value, ty: SemanticType) -> Value {
        use serde_json::Value as J;
        match (v, ty) {
            (J::Null, _) => Value::Null,
            (J::String(s), SemanticType::Text) => Value::Text(s.clone()),
            (J::Number(n), SemanticType::Text) => Value::Text(n.to_string()),
            (J::Bool(b), SemanticType::Text) => Value::Text(b.to_string()),
            (J::Array(items), SemanticType::Text) => Value::Text(
                items
                    .iter()
                    .filter_map(|i| i.as_str().map(str::to_string))
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
            (J::Number(n), SemanticType::Integer) => n.as_i64().map_or(Value::Null, Value::Integer),
            (J::Number(n), SemanticType::Real) => n.as_f64().map_or(Value::Null, Value::Real),
            (J::Bool(b), SemanticType::Boolean) => Value::Boolean(*b),
            (J::String(s), t) => Value::parse_as(s, t).unwrap_or(Value::Null),
            _ => Value::Null,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Null => J::Null,
            Value::Text(s) => J::String(s.clone()),
            Value::Integer(i) => J::from(*i),
            Value::Real(r) => serde_json::Number::from_f64(*r).map_or(J::Null, J::Number),
            Value::Date(d) => J::String(d.format("%Y-%m-%d").to_string()),
            Value::Boolean(b) => J::Bool(*b),
        }
    }

    pub(crate) fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Boolean(_) => 1,
            Value::Integer(_) | Value::Real(_) => 2,
            Value::Date(_) => 3,
            Value::Text(_) => 4,
        }
    }

    /// Total order used for canonical sorting and multiset comparison.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Date(a), Value::Date(b)) => a.cmp(b),
            (Value::Boolean(a), Value::Boolean(b)) => a.cmp(b),
            (a, b) if a.rank() == 2 && b.rank() == 2 => {
                a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap())
            }
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Text(s) => f.write_str(s),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Value::Boolean(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// Untyped decode: dates arrive as text and are coerced when bound to a schema.
impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde_json::Value as J;
        Ok(match J::deserialize(deserializer)? {
            J::Null => Value::Null,
            J::Bool(b) => Value::Boolean(b),
            J::Number(n) => match n.as_i64() {
                Some(i) => Value::Integer(i),
                None => Value::Real(n.as_f64().unwrap_or(f64::NAN)),
            },
            J::String(s) => Value::Text(s),
            other => Value::Text(other.to_string()),
        })
    }
}

pub fn cmp_rows(a: &[Value], b: &[Value]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}
