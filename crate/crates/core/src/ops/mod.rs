//! Native engine operators. Column-level functions here wrap the numeric
//! kernels in [`tfidf`], [`lda`] and [`pca`] and enforce input types.

pub mod lda;
pub mod pca;
pub mod predicate;
pub mod text;
pub mod tfidf;

use std::collections::BTreeSet;

use crate::error::EngineError;
use crate::frame::{Column, RowId, VitaFrame};
use crate::spec::{Predicate, SelectionKind};
use crate::types::{DomainType, Value};

pub use lda::{LdaParams, TopicModel};
pub use tfidf::{Norm, TfidfModel, TfidfParams};

fn type_error(op: &str, expected: &str, col: &Column) -> EngineError {
    EngineError::TypeError { op: op.to_string(), expected: expected.to_string(), found: col.dtype.to_string() }
}

/// Cleaning udfs: `lowercase`, `remove_stopwords`, `strip_punct`.
pub fn project_text(col: &Column, udf: &str) -> Result<Vec<Value>, EngineError> {
    if col.dtype != DomainType::Text {
        return Err(type_error(udf, "Text", col));
    }
    let f: fn(&str) -> String = match udf {
        "lowercase" => text::lowercase,
        "remove_stopwords" => text::remove_stopwords,
        "strip_punct" => text::strip_punct,
        other => return Err(EngineError::UnknownOp(other.to_string())),
    };
    Ok(col
        .values
        .iter()
        .map(|v| match v {
            Value::Text(s) => Value::Text(f(s)),
            other => other.clone(),
        })
        .collect())
}

pub fn tokenize(col: &Column) -> Result<Vec<Value>, EngineError> {
    if col.dtype != DomainType::Text {
        return Err(type_error("tokenize", "Text", col));
    }
    Ok(col
        .values
        .iter()
        .map(|v| text::tokens_value(text::tokenize(v.as_text().unwrap_or(""))))
        .collect())
}

/// Per-row token lists of a `List(String)` column, or of a `Text` column
/// after tokenization. Nulls are empty documents.
pub fn documents(col: &Column, op: &str) -> Result<Vec<Vec<String>>, EngineError> {
    match &col.dtype {
        DomainType::Text => Ok(col.values.iter().map(|v| text::tokenize(v.as_text().unwrap_or(""))).collect()),
        t if *t == DomainType::tokens() => col
            .values
            .iter()
            .map(|v| {
                text::cell_tokens(v)
                    .map(|ts| ts.into_iter().map(str::to_string).collect())
                    .ok_or_else(|| type_error(op, "List(String)", col))
            })
            .collect(),
        _ => Err(type_error(op, "List(String) or Text", col)),
    }
}

/// Sorted, deduplicated union of all tokens.
pub fn unique_tokens(col: &Column) -> Result<Value, EngineError> {
    let docs = documents(col, "unique_tokens")?;
    let set: BTreeSet<String> = docs.into_iter().flatten().collect();
    Ok(text::tokens_value(set.into_iter().collect()))
}

pub fn tfidf_column(col: &Column, params: TfidfParams) -> Result<(Vec<Value>, TfidfModel), EngineError> {
    let docs = documents(col, "tfidf")?;
    let (rows, model) = tfidf::tfidf(&docs, params)?;
    Ok((rows.into_iter().map(Value::Vector).collect(), model))
}

pub fn lda_column(col: &Column, params: &LdaParams) -> Result<(Vec<Value>, TopicModel), EngineError> {
    let docs = documents(col, "lda")?;
    let model = lda::lda(&docs, params)?;
    Ok((model.theta.iter().cloned().map(Value::Vector).collect(), model))
}

/// Index of the largest component; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> Option<usize> {
    (0..xs.len()).fold(None, |best, i| match best {
        Some(b) if xs[b] >= xs[i] => Some(b),
        _ => Some(i),
    })
}

pub fn cluster_assign(col: &Column) -> Result<Vec<Value>, EngineError> {
    if !matches!(col.dtype, DomainType::Vector(_)) {
        return Err(type_error("cluster_assign", "Vector", col));
    }
    Ok(col
        .values
        .iter()
        .map(|v| match v {
            Value::Vector(xs) => argmax(xs).map(|i| Value::Int(i as i64)).unwrap_or(Value::Null),
            _ => Value::Null,
        })
        .collect())
}

/// Two-dimensional projection; null rows stay null and are left out of the fit.
pub fn pca2_column(col: &Column) -> Result<Vec<Value>, EngineError> {
    if !matches!(col.dtype, DomainType::Vector(_)) {
        return Err(type_error("pca2", "Vector", col));
    }
    let present: Vec<(usize, Vec<f64>)> = col
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| match v {
            Value::Vector(xs) => Some((i, xs.clone())),
            _ => None,
        })
        .collect();
    let rows: Vec<Vec<f64>> = present.iter().map(|(_, xs)| xs.clone()).collect();
    let projected = pca::pca2(&rows)?;
    let mut out = vec![Value::Null; col.values.len()];
    for ((i, _), p) in present.iter().zip(projected) {
        out[*i] = Value::Vector(p.to_vec());
    }
    Ok(out)
}

/// Numeric view of a cell for `mean`/`sum`: numbers as-is, token lists and
/// text by their token count.
fn measure(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        Value::List(items) => Some(items.len() as f64),
        Value::Text(s) | Value::Str(s) => Some(text::tokenize(s).len() as f64),
        _ => None,
    }
}

/// Summary statistics; the result is stored as column metadata.
///
/// `mean_score_per_token` needs a TF-IDF vector column with its `vocabulary`
/// metadata and averages each component over all rows (zeros included).
pub fn aggregate(col: &Column, udf: &str) -> Result<(DomainType, Value), EngineError> {
    let measurable = col.dtype.is_numeric() || col.dtype.is_textual() || col.dtype == DomainType::tokens();
    match udf {
        "count" => Ok((DomainType::Int, Value::Int(col.values.iter().filter(|v| !v.is_null()).count() as i64))),
        "sum" | "mean" if measurable => {
            let xs: Vec<f64> = col.values.iter().filter_map(measure).collect();
            let total: f64 = xs.iter().sum();
            if udf == "sum" {
                if col.dtype == DomainType::Int {
                    let exact: i64 = col.values.iter().filter_map(|v| if let Value::Int(i) = v { Some(*i) } else { None }).sum();
                    return Ok((DomainType::Int, Value::Int(exact)));
                }
                Ok((DomainType::Float, Value::Float(total)))
            } else if xs.is_empty() {
                Err(EngineError::EmptyInput)
            } else {
                Ok((DomainType::Float, Value::Float(total / xs.len() as f64)))
            }
        }
        "sum" | "mean" => Err(type_error(udf, "a numeric, text or token column", col)),
        "mean_score_per_token" | "mean_tfidf" => {
            let vocab = vocabulary(col).ok_or_else(|| type_error(udf, "TF-IDF vectors with a vocabulary", col))?;
            if col.values.is_empty() {
                return Err(EngineError::EmptyInput);
            }
            let mut sums = vec![0.0; vocab.len()];
            for v in &col.values {
                if let Value::Vector(xs) = v {
                    for (s, x) in sums.iter_mut().zip(xs) {
                        *s += x;
                    }
                }
            }
            let n = col.values.len() as f64;
            let entries = vocab
                .into_iter()
                .zip(sums)
                .map(|(tok, s)| (Value::Str(tok), Value::Float(s / n)))
                .collect();
            Ok((DomainType::dictionary(DomainType::String, DomainType::Float), Value::Dictionary(entries)))
        }
        other => Err(EngineError::UnknownOp(other.to_string())),
    }
}

/// Vocabulary attached to a TF-IDF column.
pub fn vocabulary(col: &Column) -> Option<Vec<String>> {
    if !matches!(col.dtype, DomainType::Vector(_)) {
        return None;
    }
    match &col.meta("vocabulary")?.value {
        Value::List(items) => items
            .iter()
            .map(|i| match i {
                Value::Str(s) => Some(s.clone()),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

/// Row ids whose `field` satisfies the predicate, in frame order.
/// The pseudo-field `row_id` addresses the stable row identifier.
pub fn filter(frame: &VitaFrame, pred: &Predicate, kind: SelectionKind) -> Result<Vec<RowId>, EngineError> {
    if pred.field == "row_id" && frame.column("row_id").is_none() {
        predicate::check(&DomainType::Int, pred, kind)?;
        return Ok(frame
            .row_ids()
            .iter()
            .copied()
            .filter(|id| predicate::matches(&Value::Int(*id as i64), pred, kind))
            .collect());
    }
    let col = frame.column(&pred.field).ok_or_else(|| EngineError::UnknownField(pred.field.clone()))?;
    predicate::check(&col.dtype, pred, kind)?;
    Ok(frame
        .row_ids()
        .iter()
        .zip(&col.values)
        .filter(|(_, v)| predicate::matches(v, pred, kind))
        .map(|(id, _)| *id)
        .collect())
}
