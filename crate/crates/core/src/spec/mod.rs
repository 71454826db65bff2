//! Operator specifications in their two surface forms, JSON and
//! line-oriented commands, both parsed into [`OperatorNode`].

mod ast;
mod command;
mod json;

pub use ast::*;
pub use command::parse_command;
pub use json::{literal_to_json, node_to_json, parse_json, serialize};

use crate::error::SpecError;

fn schema(path: &str, reason: impl Into<String>) -> SpecError {
    SpecError::Schema { path: path.to_string(), reason: reason.into() }
}

/// Structural rules shared by both surfaces.
pub(crate) fn validate(node: &OperatorNode, path: &str) -> Result<(), SpecError> {
    let kind = &node.kind;
    if kind.is_composite() {
        if node.children.is_empty() {
            return Err(schema(&format!("{path}.ops"), "pipeline must contain at least one operator"));
        }
    } else if !node.children.is_empty() {
        return Err(schema(&format!("{path}.ops"), format!("`{kind}` does not take a pipeline")));
    }
    match (kind, &node.name) {
        (OpKind::Synthesize, None) => return Err(schema(path, "synthesize requires `name`")),
        (OpKind::Synthesize, Some(n)) if !is_identifier(n) => {
            return Err(schema(&format!("{path}.name"), "name must be an identifier"))
        }
        (OpKind::Synthesize, Some(_)) => {}
        (_, Some(_)) => return Err(schema(&format!("{path}.name"), "only synthesize takes a name")),
        (_, None) => {}
    }
    if kind.is_actionless() && node.action.is_some() {
        return Err(schema(&format!("{path}.action"), format!("`{kind}` does not take an action")));
    }
    if kind.is_unit_transform() {
        if node.udf.is_none() {
            return Err(schema(path, format!("`{kind}` requires `udf`")));
        }
    } else if node.udf.is_some() {
        return Err(schema(&format!("{path}.udf"), format!("`{kind}` does not take a udf")));
    }
    match kind {
        OpKind::Select => {
            if node.view.is_none() {
                return Err(schema(path, "select requires `view`"));
            }
            let sel = node.selection.as_ref().ok_or_else(|| schema(path, "select requires `selection`"))?;
            validate_selection(sel, &format!("{path}.selection"))?;
        }
        _ if node.selection.is_some() => {
            return Err(schema(&format!("{path}.selection"), "only select takes a selection"));
        }
        _ => {}
    }
    match kind {
        OpKind::Coordinate => {
            if node.view.is_none() {
                return Err(schema(path, "coordinate requires `view` (the source view)"));
            }
            for key in ["target", "on"] {
                if node.param_str(key).is_none() {
                    return Err(schema(&format!("{path}.params.{key}"), "expected a string"));
                }
            }
            for key in ["type", "source_type"] {
                if let Some(v) = node.params.get(key) {
                    if v.as_str().and_then(MappingTag::parse).is_none() {
                        return Err(schema(&format!("{path}.params.{key}"), "expected single or multi"));
                    }
                }
            }
        }
        OpKind::Checkout => match node.params.get("version") {
            Some(Literal::Int(v)) if *v >= 0 => {}
            _ => return Err(schema(&format!("{path}.params.version"), "expected a non-negative integer")),
        },
        OpKind::Load => {
            if node.param_str("path").is_none() {
                return Err(schema(&format!("{path}.params.path"), "expected a string"));
            }
            if let Some(cols) = node.params.get("text_columns") {
                let ok = matches!(cols, Literal::List(items) if items.iter().all(|i| i.as_str().is_some()));
                if !ok {
                    return Err(schema(&format!("{path}.params.text_columns"), "expected a list of strings"));
                }
            }
        }
        OpKind::Clear => {
            if node.column.is_some() || !node.params.is_empty() {
                return Err(schema(path, "clear takes at most a view"));
            }
        }
        OpKind::Undo => {
            if node.column.is_some() || node.view.is_some() || !node.params.is_empty() {
                return Err(schema(path, "undo takes no arguments"));
            }
        }
        _ => {}
    }
    for (i, child) in node.children.iter().enumerate() {
        let cpath = format!("{path}.ops[{i}]");
        if !child.kind.is_pipeline_member() {
            return Err(schema(&format!("{cpath}.operator"), format!("`{}` cannot appear in a pipeline", child.kind)));
        }
        validate(child, &cpath)?;
    }
    Ok(())
}

fn validate_selection(sel: &Selection, path: &str) -> Result<(), SpecError> {
    let pred = &sel.predicate;
    match sel.kind {
        SelectionKind::Interval => {
            let (lo, hi) = sel
                .interval_bounds()
                .ok_or_else(|| schema(path, "interval selection needs `in` with a numeric [low, high] pair"))?;
            if lo > hi {
                return Err(schema(&format!("{path}.value"), "interval low exceeds high"));
            }
        }
        _ => match (&pred.op, &pred.value) {
            (CmpOp::In, Literal::List(_)) => {}
            (CmpOp::In, _) => return Err(schema(&format!("{path}.value"), "`in` expects a list")),
            (CmpOp::Contains, Literal::Str(_)) => {}
            (CmpOp::Contains, _) => return Err(schema(&format!("{path}.value"), "`contains` expects a string")),
            (_, Literal::List(_)) => {
                return Err(schema(&format!("{path}.value"), "comparison expects a scalar"))
            }
            _ => {}
        },
    }
    Ok(())
}
