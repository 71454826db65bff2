//! JSON operator specifications.
//!
//! ```json
//! {"operator": "combine", "column": "Review", "action": "update",
//!  "ops": [{"operator": "project", "udf": "lowercase"},
//!          {"operator": "project", "udf": "remove_stopwords"}]}
//! ```

use serde_json::{Map, Value as J};

use super::ast::*;
use super::validate;
use crate::error::SpecError;

const NODE_KEYS: [&str; 9] = ["operator", "action", "column", "view", "udf", "params", "ops", "name", "selection"];
const SELECTION_KEYS: [&str; 5] = ["type", "kind", "field", "op", "value"];

pub fn parse_json(bytes: &[u8]) -> Result<OperatorNode, SpecError> {
    let tree: J = serde_json::from_slice(bytes).map_err(|e| syntax_error(bytes, &e))?;
    let node = node_from_json(&tree, "$")?;
    validate(&node, "$")?;
    Ok(node)
}

fn syntax_error(bytes: &[u8], e: &serde_json::Error) -> SpecError {
    SpecError::Syntax { position: byte_offset(bytes, e.line(), e.column()), message: e.to_string(), expected: vec![] }
}

/// serde_json reports 1-based line and column; convert to a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for _ in 1..line {
        match bytes[offset..].iter().position(|b| *b == b'\n') {
            Some(nl) => offset += nl + 1,
            None => return bytes.len(),
        }
    }
    (offset + column.saturating_sub(1)).min(bytes.len())
}

fn schema(path: &str, reason: impl Into<String>) -> SpecError {
    SpecError::Schema { path: path.to_string(), reason: reason.into() }
}

fn expect_object<'a>(v: &'a J, path: &str) -> Result<&'a Map<String, J>, SpecError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn reject_unknown(obj: &Map<String, J>, allowed: &[&str], path: &str) -> Result<(), SpecError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(&format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn opt_string(obj: &Map<String, J>, key: &str, path: &str) -> Result<Option<String>, SpecError> {
    match obj.get(key) {
        None => Ok(None),
        Some(J::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(schema(&format!("{path}.{key}"), "expected a string")),
    }
}

fn literal_from_json(v: &J, path: &str) -> Result<Literal, SpecError> {
    match v {
        J::String(s) => Ok(Literal::Str(s.clone())),
        J::Bool(b) => Ok(Literal::Bool(*b)),
        J::Number(n) => match n.as_i64() {
            Some(i) if !n.is_f64() => Ok(Literal::Int(i)),
            _ => n
                .as_f64()
                .filter(|x| x.is_finite())
                .map(Literal::Float)
                .ok_or_else(|| schema(path, "number out of range")),
        },
        J::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| literal_from_json(item, &format!("{path}[{i}]")))
            .collect::<Result<_, _>>()
            .map(Literal::List),
        J::Null | J::Object(_) => Err(schema(path, "expected a string, number, boolean or array")),
    }
}

fn node_from_json(v: &J, path: &str) -> Result<OperatorNode, SpecError> {
    let obj = expect_object(v, path)?;
    reject_unknown(obj, &NODE_KEYS, path)?;
    let operator = opt_string(obj, "operator", path)?.ok_or_else(|| schema(path, "missing `operator`"))?;
    if !is_identifier(&operator) {
        return Err(schema(&format!("{path}.operator"), "operator must be an identifier"));
    }
    let mut node = OperatorNode::new(OpKind::from_keyword(&operator));
    if let Some(action) = opt_string(obj, "action", path)? {
        node.action = Some(
            Action::parse(&action)
                .ok_or_else(|| schema(&format!("{path}.action"), "expected add, create or update"))?,
        );
    }
    node.column = opt_string(obj, "column", path)?;
    node.view = opt_string(obj, "view", path)?;
    node.udf = opt_string(obj, "udf", path)?;
    node.name = opt_string(obj, "name", path)?;
    if let Some(params) = obj.get("params") {
        let ppath = format!("{path}.params");
        for (k, v) in expect_object(params, &ppath)? {
            node.params.insert(k.clone(), literal_from_json(v, &format!("{ppath}.{k}"))?);
        }
    }
    if let Some(ops) = obj.get("ops") {
        let opath = format!("{path}.ops");
        let items = ops.as_array().ok_or_else(|| schema(&opath, "expected an array"))?;
        for (i, item) in items.iter().enumerate() {
            node.children.push(node_from_json(item, &format!("{opath}[{i}]"))?);
        }
        if items.is_empty() {
            return Err(schema(&opath, "pipeline must contain at least one operator"));
        }
    }
    if let Some(sel) = obj.get("selection") {
        node.selection = Some(selection_from_json(sel, &format!("{path}.selection"))?);
    }
    Ok(node)
}

fn selection_from_json(v: &J, path: &str) -> Result<Selection, SpecError> {
    let obj = expect_object(v, path)?;
    reject_unknown(obj, &SELECTION_KEYS, path)?;
    let kind = opt_string(obj, "kind", path)?.ok_or_else(|| schema(path, "missing `kind`"))?;
    let kind = SelectionKind::parse(&kind)
        .ok_or_else(|| schema(&format!("{path}.kind"), "expected single, list or interval"))?;
    let field = opt_string(obj, "field", path)?.ok_or_else(|| schema(path, "missing `field`"))?;
    let op = opt_string(obj, "op", path)?.ok_or_else(|| schema(path, "missing `op`"))?;
    let op = CmpOp::parse(&op).ok_or_else(|| schema(&format!("{path}.op"), "unknown comparison"))?;
    let value = obj.get("value").ok_or_else(|| schema(path, "missing `value`"))?;
    let value = literal_from_json(value, &format!("{path}.value"))?;
    let mapping_tag = match opt_string(obj, "type", path)? {
        None => None,
        Some(t) => Some(MappingTag::parse(&t).ok_or_else(|| schema(&format!("{path}.type"), "expected single or multi"))?),
    };
    Ok(Selection { kind, predicate: Predicate { field, op, value }, mapping_tag })
}

pub fn literal_to_json(lit: &Literal) -> J {
    match lit {
        Literal::Str(s) => J::String(s.clone()),
        Literal::Int(i) => J::from(*i),
        Literal::Float(x) => serde_json::Number::from_f64(*x).map(J::Number).unwrap_or(J::Null),
        Literal::Bool(b) => J::Bool(*b),
        Literal::List(items) => J::Array(items.iter().map(literal_to_json).collect()),
    }
}

pub fn node_to_json(node: &OperatorNode) -> J {
    let mut obj = Map::new();
    obj.insert("operator".into(), J::String(node.kind.keyword().to_string()));
    if let Some(a) = node.action {
        obj.insert("action".into(), J::String(a.as_str().into()));
    }
    for (key, field) in [("column", &node.column), ("view", &node.view), ("udf", &node.udf), ("name", &node.name)] {
        if let Some(s) = field {
            obj.insert(key.into(), J::String(s.clone()));
        }
    }
    if !node.params.is_empty() {
        let params = node.params.iter().map(|(k, v)| (k.clone(), literal_to_json(v))).collect();
        obj.insert("params".into(), J::Object(params));
    }
    if !node.children.is_empty() {
        obj.insert("ops".into(), J::Array(node.children.iter().map(node_to_json).collect()));
    }
    if let Some(sel) = &node.selection {
        let mut s = Map::new();
        s.insert("kind".into(), J::String(sel.kind.as_str().into()));
        s.insert("field".into(), J::String(sel.predicate.field.clone()));
        s.insert("op".into(), J::String(sel.predicate.op.as_str().into()));
        s.insert("value".into(), literal_to_json(&sel.predicate.value));
        if let Some(tag) = sel.mapping_tag {
            s.insert("type".into(), J::String(tag.as_str().into()));
        }
        obj.insert("selection".into(), J::Object(s));
    }
    J::Object(obj)
}

/// Canonical JSON bytes: sorted keys, no insignificant whitespace.
pub fn serialize(node: &OperatorNode) -> Vec<u8> {
    serde_json::to_vec(&node_to_json(node)).expect("json tree always serializes")
}
