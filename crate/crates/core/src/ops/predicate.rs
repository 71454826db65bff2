//! Field-comparison predicates over typed values.

use std::cmp::Ordering;

use crate::error::EngineError;
use crate::spec::{CmpOp, Literal, Predicate, SelectionKind};
use crate::types::{parse_datetime, DomainType, Value};

use super::text::{contains_token, lowercase};

fn type_error(pred: &Predicate, dtype: &DomainType) -> EngineError {
    EngineError::TypeError {
        op: format!("{} {} {}", pred.field, pred.op.as_str(), pred.value),
        expected: "a literal comparable with the field".into(),
        found: dtype.to_string(),
    }
}

fn literal_fits(dtype: &DomainType, lit: &Literal) -> bool {
    match (dtype, lit) {
        (DomainType::Int | DomainType::Float, Literal::Int(_) | Literal::Float(_)) => true,
        (DomainType::String | DomainType::Text, Literal::Str(_)) => true,
        (DomainType::Bool, Literal::Bool(_)) => true,
        (DomainType::DateTime, Literal::Str(s)) => parse_datetime(s).is_some(),
        _ => false,
    }
}

/// Rejects predicates whose operator or literal cannot apply to `dtype`.
pub fn check(dtype: &DomainType, pred: &Predicate, kind: SelectionKind) -> Result<(), EngineError> {
    let ok = match (pred.op, &pred.value) {
        (CmpOp::In, Literal::List(items)) if kind == SelectionKind::Interval => {
            dtype.is_numeric() && items.len() == 2 && items.iter().all(|i| i.as_f64().is_some())
        }
        (CmpOp::In, Literal::List(items)) => items.iter().all(|i| literal_fits(dtype, i)),
        (CmpOp::In, _) => false,
        (CmpOp::Contains, Literal::Str(_)) => dtype.is_textual() || *dtype == DomainType::tokens(),
        (CmpOp::Contains, _) => false,
        (CmpOp::Eq | CmpOp::Ne, lit) => literal_fits(dtype, lit),
        (_, lit) => literal_fits(dtype, lit) && *dtype != DomainType::Bool,
    };
    if ok {
        Ok(())
    } else {
        Err(type_error(pred, dtype))
    }
}

fn compare(value: &Value, lit: &Literal) -> Option<Ordering> {
    match (value, lit) {
        (Value::Int(a), Literal::Int(b)) => Some(a.cmp(b)),
        (Value::Int(_) | Value::Float(_), Literal::Int(_) | Literal::Float(_)) => {
            value.as_f64()?.partial_cmp(&lit.as_f64()?)
        }
        (Value::Str(a) | Value::Text(a), Literal::Str(b)) => Some(a.as_str().cmp(b.as_str())),
        (Value::Bool(a), Literal::Bool(b)) => Some(a.cmp(b)),
        (Value::DateTime(a), Literal::Str(b)) => Some(a.cmp(&parse_datetime(b)?)),
        _ => None,
    }
}

/// Whether a value satisfies the predicate. `Null` satisfies nothing.
pub fn matches(value: &Value, pred: &Predicate, kind: SelectionKind) -> bool {
    if value.is_null() {
        return false;
    }
    match (pred.op, &pred.value) {
        (CmpOp::In, Literal::List(items)) if kind == SelectionKind::Interval && items.len() == 2 => {
            match (value.as_f64(), items[0].as_f64(), items[1].as_f64()) {
                (Some(x), Some(lo), Some(hi)) => lo <= x && x <= hi,
                _ => false,
            }
        }
        (CmpOp::In, Literal::List(items)) => items.iter().any(|i| compare(value, i) == Some(Ordering::Equal)),
        (CmpOp::Contains, Literal::Str(needle)) => match value {
            Value::Str(s) | Value::Text(s) => contains_token(s, needle),
            Value::List(items) => {
                let needle = lowercase(needle);
                items.iter().any(|i| matches!(i, Value::Str(s) if lowercase(s) == needle))
            }
            _ => false,
        },
        (op, lit) => match compare(value, lit) {
            None => false,
            Some(ord) => match op {
                CmpOp::Eq => ord == Ordering::Equal,
                CmpOp::Ne => ord != Ordering::Equal,
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
                CmpOp::Contains | CmpOp::In => false,
            },
        },
    }
}
