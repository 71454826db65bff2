//! Data domain of the algebra: primitive and synthesized types, cell values,
//! and the generator that infers a primitive type from raw text.

use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

/// Type tag of a column or a metadata entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainType {
    String,
    Int,
    Float,
    Bool,
    DateTime,
    List(Box<DomainType>),
    Vector(Box<DomainType>),
    Dictionary(Box<DomainType>, Box<DomainType>),
    Text,
    Visualization,
}

impl DomainType {
    pub fn list(inner: DomainType) -> Self {
        DomainType::List(Box::new(inner))
    }

    pub fn vector(inner: DomainType) -> Self {
        DomainType::Vector(Box::new(inner))
    }

    pub fn dictionary(key: DomainType, value: DomainType) -> Self {
        DomainType::Dictionary(Box::new(key), Box::new(value))
    }

    /// `List(String)`, the type of a tokenized document.
    pub fn tokens() -> Self {
        Self::list(DomainType::String)
    }

    pub fn is_primitive(&self) -> bool {
        !self.is_synthesized()
    }

    pub fn is_synthesized(&self) -> bool {
        matches!(self, DomainType::Text | DomainType::Visualization)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, DomainType::Int | DomainType::Float)
    }

    /// Text-like columns accept the cleaning operators and `contains` predicates.
    pub fn is_textual(&self) -> bool {
        matches!(self, DomainType::Text | DomainType::String)
    }

    /// Checks the structural rules a type must obey: vectors are numeric and
    /// every container carries a resolved inner type.
    pub fn is_well_formed(&self) -> bool {
        match self {
            DomainType::List(inner) => inner.is_well_formed(),
            DomainType::Vector(inner) => inner.is_numeric(),
            DomainType::Dictionary(k, v) => k.is_well_formed() && v.is_well_formed(),
            _ => true,
        }
    }
}

impl fmt::Display for DomainType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainType::String => write!(f, "String"),
            DomainType::Int => write!(f, "Int"),
            DomainType::Float => write!(f, "Float"),
            DomainType::Bool => write!(f, "Bool"),
            DomainType::DateTime => write!(f, "DateTime"),
            DomainType::List(t) => write!(f, "List({t})"),
            DomainType::Vector(t) => write!(f, "Vector({t})"),
            DomainType::Dictionary(k, v) => write!(f, "Dictionary({k},{v})"),
            DomainType::Text => write!(f, "Text"),
            DomainType::Visualization => write!(f, "Visualization"),
        }
    }
}

/// A single cell or metadata value.
///
/// `Null` is legal in any column; everything else must match the declared
/// [`DomainType`] of its container (see [`Value::conforms_to`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Null,
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    DateTime(NaiveDateTime),
    List(Vec<Value>),
    Vector(Vec<f64>),
    /// Ordered map; keys are unique.
    Dictionary(Vec<(Value, Value)>),
    Text(String),
    /// Reference to a chart in the session's view catalog.
    Visualization(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn conforms_to(&self, dtype: &DomainType) -> bool {
        match (self, dtype) {
            (Value::Null, _) => true,
            (Value::Str(_), DomainType::String) => true,
            (Value::Text(_), DomainType::Text) => true,
            (Value::Int(_), DomainType::Int) => true,
            (Value::Float(x), DomainType::Float) => x.is_finite(),
            (Value::Bool(_), DomainType::Bool) => true,
            (Value::DateTime(_), DomainType::DateTime) => true,
            (Value::Visualization(_), DomainType::Visualization) => true,
            (Value::List(items), DomainType::List(inner)) => {
                items.iter().all(|v| !v.is_null() && v.conforms_to(inner))
            }
            (Value::Vector(xs), DomainType::Vector(inner)) => match inner.as_ref() {
                DomainType::Float => xs.iter().all(|x| x.is_finite()),
                DomainType::Int => xs.iter().all(|x| x.is_finite() && x.fract() == 0.0),
                _ => false,
            },
            (Value::Dictionary(entries), DomainType::Dictionary(k, v)) => {
                let keys_ok = entries
                    .iter()
                    .all(|(key, val)| !key.is_null() && key.conforms_to(k) && val.conforms_to(v));
                keys_ok && entries_have_unique_keys(entries)
            }
            _ => false,
        }
    }

    /// String content of a text-like value; `Null` reads as the empty string.
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Str(s) | Value::Text(s) => Some(s),
            Value::Null => Some(""),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    /// Plain JSON rendering for tables and chart data (untagged).
    pub fn to_display_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Null => J::Null,
            Value::Str(s) | Value::Text(s) | Value::Visualization(s) => J::String(s.clone()),
            Value::Int(i) => J::from(*i),
            Value::Float(x) => serde_json::Number::from_f64(*x).map(J::Number).unwrap_or(J::Null),
            Value::Bool(b) => J::Bool(*b),
            Value::DateTime(t) => J::String(format_datetime(t)),
            Value::List(items) => J::Array(items.iter().map(Value::to_display_json).collect()),
            Value::Vector(xs) => J::Array(
                xs.iter()
                    .map(|x| serde_json::Number::from_f64(*x).map(J::Number).unwrap_or(J::Null))
                    .collect(),
            ),
            Value::Dictionary(entries) => {
                let mut map = serde_json::Map::new();
                for (k, v) in entries {
                    map.insert(k.display_key(), v.to_display_json());
                }
                J::Object(map)
            }
        }
    }

    fn display_key(&self) -> String {
        match self {
            Value::Str(s) | Value::Text(s) => s.clone(),
            other => other.to_display_json().to_string(),
        }
    }
}

fn entries_have_unique_keys(entries: &[(Value, Value)]) -> bool {
    entries
        .iter()
        .enumerate()
        .all(|(i, (k, _))| entries[..i].iter().all(|(other, _)| other != k))
}

const DATETIME_FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"];

pub(crate) fn parse_datetime(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    for fmt in DATETIME_FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(t);
        }
    }
    chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

pub(crate) fn format_datetime(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim() {
        "true" | "True" | "TRUE" => Some(true),
        "false" | "False" | "FALSE" => Some(false),
        _ => None,
    }
}

fn parse_int(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    let digits = raw.strip_prefix(['-', '+']).unwrap_or(raw);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    raw.parse().ok()
}

fn parse_float(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    // Rust accepts "inf"/"NaN"; only finite decimal literals count.
    if !raw.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    raw.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Generator function from raw strings to the most specific primitive type.
///
/// Precedence is Bool > Int > Float > DateTime > String. Never fails: any
/// string that matches nothing more specific is a `String`.
pub fn infer_type(raw: &str) -> DomainType {
    if parse_bool(raw).is_some() {
        DomainType::Bool
    } else if parse_int(raw).is_some() {
        DomainType::Int
    } else if parse_float(raw).is_some() {
        DomainType::Float
    } else if parse_datetime(raw).is_some() {
        DomainType::DateTime
    } else {
        DomainType::String
    }
}

/// Least type that admits every sample; used by the CSV loader per column.
pub(crate) fn unify(a: &DomainType, b: &DomainType) -> DomainType {
    use DomainType::*;
    match (a, b) {
        (x, y) if x == y => x.clone(),
        (Int, Float) | (Float, Int) => Float,
        _ => String,
    }
}

/// Converts a raw cell into a value of `dtype`. Empty cells are `Null`.
pub(crate) fn parse_cell(raw: &str, dtype: &DomainType) -> Option<Value> {
    if raw.is_empty() {
        return Some(Value::Null);
    }
    match dtype {
        DomainType::Bool => parse_bool(raw).map(Value::Bool),
        DomainType::Int => parse_int(raw).map(Value::Int),
        DomainType::Float => parse_float(raw).map(Value::Float),
        DomainType::DateTime => parse_datetime(raw).map(Value::DateTime),
        DomainType::String => Some(Value::Str(raw.to_string())),
        DomainType::Text => Some(Value::Text(raw.to_string())),
        _ => None,
    }
}
