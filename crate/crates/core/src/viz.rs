//! Chart specifications built by the `visualize` operator and their
//! Vega-Lite v5 emission.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as J};

use crate::error::EngineError;
use crate::frame::{Column, RowId, VitaFrame};
use crate::ops::{self, text};
use crate::types::{DomainType, Value};

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mark {
    Bar,
    Point,
}

impl Mark {
    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Bar => "bar",
            Mark::Point => "point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Nominal,
    Quantitative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub field: String,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataField {
    pub name: String,
    pub dtype: DomainType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub name: String,
    /// Fields identifying a selected mark.
    pub fields: Vec<String>,
}

/// Where a chart's marks come from and how they map to frame rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceBinding {
    pub column: String,
    pub metadata: Option<String>,
    /// Field of the inline data that identifies a mark.
    pub key_field: String,
    /// Field carrying row ids, when marks are rows.
    pub row_id_field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transforms {
    pub sort_descending: bool,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizSpec {
    pub view_id: String,
    pub mark: Mark,
    pub fields: Vec<DataField>,
    /// Inline records, aligned with `fields`.
    pub rows: Vec<Vec<Value>>,
    /// Channel name (`x`, `y`, `color`, `tooltip`) to encoding.
    pub encodings: BTreeMap<String, Vec<Encoding>>,
    pub transforms: Transforms,
    pub signals: Vec<Signal>,
    pub source: SourceBinding,
    /// Mark key to the frame rows it stands for.
    pub marks: BTreeMap<String, Vec<RowId>>,
}

impl VizSpec {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn selection_param(&self) -> String {
        format!("sel_{}", self.view_id)
    }

    /// Mark key of an inline record.
    pub fn mark_key(&self, row: &[Value]) -> String {
        let i = self.field_index(&self.source.key_field).expect("key field is always inline");
        key_string(&row[i])
    }
}

pub(crate) fn key_string(v: &Value) -> String {
    match v {
        Value::Str(s) | Value::Text(s) => s.clone(),
        other => other.to_display_json().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarParams {
    pub column: String,
    pub metadata: String,
    pub top_k: usize,
    pub category: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterParams {
    pub column: String,
    pub color: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChartParams {
    Bar(BarParams),
    Scatter(ScatterParams),
}

pub fn visualize(frame: &VitaFrame, view_id: &str, params: &ChartParams) -> Result<VizSpec, EngineError> {
    match params {
        ChartParams::Bar(p) => bar(frame, view_id, p),
        ChartParams::Scatter(p) => scatter(frame, view_id, p),
    }
}

fn missing(what: String) -> EngineError {
    EngineError::MissingBinding(what)
}

/// Rows each token stands for, derived from the column the scores came from.
fn token_rows(frame: &VitaFrame, col: &Column, token: &str) -> Result<Vec<RowId>, EngineError> {
    let ids = frame.row_ids();
    let hit = |i: usize| -> bool {
        let v = &col.values[i];
        match v {
            Value::Vector(_) => false,
            Value::List(_) => text::cell_tokens(v).is_some_and(|ts| ts.contains(&token)),
            Value::Text(s) | Value::Str(s) => text::contains_token(s, token),
            _ => false,
        }
    };
    if let DomainType::Vector(_) = col.dtype {
        let vocab = ops::vocabulary(col).ok_or_else(|| missing(format!("column `{}` has no vocabulary", col.name)))?;
        let Some(j) = vocab.iter().position(|t| t == token) else { return Ok(Vec::new()) };
        return Ok((0..ids.len())
            .filter(|&i| matches!(&col.values[i], Value::Vector(xs) if xs[j] != 0.0))
            .map(|i| ids[i])
            .collect());
    }
    if !(col.dtype.is_textual() || col.dtype == DomainType::tokens()) {
        return Err(missing(format!("cannot map tokens to rows of `{}`", col.name)));
    }
    Ok((0..ids.len()).filter(|&i| hit(i)).map(|i| ids[i]).collect())
}

fn bar(frame: &VitaFrame, view_id: &str, p: &BarParams) -> Result<VizSpec, EngineError> {
    let col = frame.try_column(&p.column)?;
    let entry = col
        .meta(&p.metadata)
        .ok_or_else(|| missing(format!("metadata `{}` on `{}`", p.metadata, p.column)))?;
    let Value::Dictionary(entries) = &entry.value else {
        return Err(EngineError::TypeError {
            op: "bar".into(),
            expected: "Dictionary(String,Float)".into(),
            found: entry.dtype.to_string(),
        });
    };
    let mut scored: Vec<(String, f64)> = entries
        .iter()
        .filter_map(|(k, v)| Some((key_string(k), v.as_f64()?)))
        .collect();
    if scored.is_empty() {
        return Err(missing(format!("metadata `{}` is empty", p.metadata)));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(p.top_k);

    let mut marks = BTreeMap::new();
    let mut rows = Vec::with_capacity(scored.len());
    for (token, score) in scored {
        marks.insert(token.clone(), token_rows(frame, col, &token)?);
        rows.push(vec![Value::Str(token), Value::Float(score)]);
    }
    let nominal = Encoding { field: p.category.clone(), kind: FieldKind::Nominal };
    let quant = Encoding { field: p.value.clone(), kind: FieldKind::Quantitative };
    Ok(VizSpec {
        view_id: view_id.to_string(),
        mark: Mark::Bar,
        fields: vec![
            DataField { name: p.category.clone(), dtype: DomainType::String },
            DataField { name: p.value.clone(), dtype: DomainType::Float },
        ],
        rows,
        encodings: BTreeMap::from([
            ("x".to_string(), vec![nominal.clone()]),
            ("y".to_string(), vec![quant.clone()]),
            ("tooltip".to_string(), vec![nominal, quant]),
        ]),
        transforms: Transforms { sort_descending: true, top_k: Some(p.top_k) },
        signals: vec![Signal { name: format!("sel_{view_id}"), fields: vec![p.category.clone()] }],
        source: SourceBinding {
            column: p.column.clone(),
            metadata: Some(p.metadata.clone()),
            key_field: p.category.clone(),
            row_id_field: None,
        },
        marks,
    })
}

fn scatter(frame: &VitaFrame, view_id: &str, p: &ScatterParams) -> Result<VizSpec, EngineError> {
    let col = frame.try_column(&p.column)?;
    if !matches!(col.dtype, DomainType::Vector(_)) || col.vector_dim().is_some_and(|d| d != 2) {
        return Err(EngineError::TypeError {
            op: "scatter".into(),
            expected: "2D Vector column".into(),
            found: col.dtype.to_string(),
        });
    }
    let color = match &p.color {
        Some(name) => Some(frame.try_column(name)?),
        None => None,
    };
    let mut fields = vec![
        DataField { name: "row_id".into(), dtype: DomainType::Int },
        DataField { name: "x".into(), dtype: DomainType::Float },
        DataField { name: "y".into(), dtype: DomainType::Float },
    ];
    if let Some(c) = color {
        fields.push(DataField { name: "cluster".into(), dtype: c.dtype.clone() });
    }
    let mut rows = Vec::new();
    let mut marks = BTreeMap::new();
    for (i, (id, v)) in frame.row_ids().iter().zip(&col.values).enumerate() {
        let Value::Vector(xy) = v else { continue };
        let mut record = vec![Value::Int(*id as i64), Value::Float(xy[0]), Value::Float(xy[1])];
        if let Some(c) = color {
            record.push(c.values[i].clone());
        }
        marks.insert(id.to_string(), vec![*id]);
        rows.push(record);
    }
    let mut encodings = BTreeMap::from([
        ("x".to_string(), vec![Encoding { field: "x".into(), kind: FieldKind::Quantitative }]),
        ("y".to_string(), vec![Encoding { field: "y".into(), kind: FieldKind::Quantitative }]),
        ("tooltip".to_string(), vec![Encoding { field: "row_id".into(), kind: FieldKind::Nominal }]),
    ]);
    if color.is_some() {
        encodings.insert("color".into(), vec![Encoding { field: "cluster".into(), kind: FieldKind::Nominal }]);
    }
    Ok(VizSpec {
        view_id: view_id.to_string(),
        mark: Mark::Point,
        fields,
        rows,
        encodings,
        transforms: Transforms { sort_descending: false, top_k: None },
        signals: vec![Signal { name: format!("sel_{view_id}"), fields: vec!["row_id".into()] }],
        source: SourceBinding {
            column: p.column.clone(),
            metadata: None,
            key_field: "row_id".into(),
            row_id_field: Some("row_id".into()),
        },
        marks,
    })
}

fn encoding_json(e: &Encoding) -> J {
    let kind = match e.kind {
        FieldKind::Nominal => "nominal",
        FieldKind::Quantitative => "quantitative",
    };
    json!({"field": e.field, "type": kind})
}

/// Vega-Lite v5 document as a JSON tree.
pub fn vegalite_json(spec: &VizSpec) -> J {
    let values: Vec<J> = spec
        .rows
        .iter()
        .map(|row| {
            let record: Map<String, J> =
                spec.fields.iter().zip(row).map(|(f, v)| (f.name.clone(), v.to_display_json())).collect();
            J::Object(record)
        })
        .collect();
    let mut encoding = Map::new();
    for (channel, encs) in &spec.encodings {
        let value = if channel == "tooltip" {
            J::Array(encs.iter().map(encoding_json).collect())
        } else {
            let mut e = encoding_json(&encs[0]);
            if channel == "x" && spec.transforms.sort_descending {
                e["sort"] = json!("-y");
            }
            e
        };
        encoding.insert(channel.clone(), value);
    }
    let param = spec.selection_param();
    encoding.insert("opacity".into(), json!({"condition": {"param": param, "value": 1}, "value": 0.3}));
    let params: Vec<J> = spec
        .signals
        .iter()
        .map(|s| json!({"name": s.name, "select": {"type": "point", "fields": s.fields}}))
        .collect();
    json!({
        "$schema": VEGA_LITE_SCHEMA,
        "data": {"values": values},
        "mark": spec.mark.as_str(),
        "encoding": encoding,
        "params": params,
        "usermeta": {"view_id": spec.view_id, "key_field": spec.source.key_field},
    })
}

/// Canonical Vega-Lite bytes (sorted keys, compact).
pub fn to_vegalite(spec: &VizSpec) -> Vec<u8> {
    serde_json::to_vec(&vegalite_json(spec)).expect("json tree always serializes")
}
