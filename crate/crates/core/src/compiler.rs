//! Rule-based translation of [`OperatorNode`]s into fully defaulted plans.
//!
//! Compilation threads a copy of the frame schema and the chart catalog
//! through every step, so each step is checked against the columns and views
//! that exist at its point in the plan. Missing details are filled in by
//! fixed rules:
//!
//! | omitted            | default                                                      |
//! |--------------------|--------------------------------------------------------------|
//! | action             | project: update, mutate: create, aggregate/set: add, visualize: create |
//! | created column     | `<column>_<udf>`                                              |
//! | metadata key       | `<udf>`                                                       |
//! | input column       | the only `Text` column of the frame                           |
//! | bar chart          | top_k 15, descending, ties by key                             |
//! | view id            | `v<n>` for the next free n                                    |

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coord::TABLE_VIEW;
use crate::error::{CompileError, CompileErrorKind as K};
use crate::frame::{ColumnSchema, FrameSchema};
use crate::ops::{lda, predicate, tfidf::Norm};
use crate::spec::{self, builtin_udf_kind, Action, Literal, MappingTag, OpKind, OperatorNode, Selection};
use crate::types::DomainType;
use crate::viz::{BarParams, ChartParams, DataField, ScatterParams};

pub const DEFAULT_TOP_K: i64 = 15;
pub const DEFAULT_LDA_K: i64 = 5;
pub const DEFAULT_LDA_SEED: i64 = 0;
pub const DEFAULT_CATEGORY_FIELD: &str = "token";
pub const DEFAULT_VALUE_FIELD: &str = "score";
/// Metadata key marking a cluster-id column; holds the cluster count.
pub const CLUSTERS_META: &str = "clusters";
pub const VOCABULARY_META: &str = "vocabulary";
pub const IDF_META: &str = "idf";

/// Chart view id to its inline data fields.
pub type ViewSchemas = BTreeMap<String, Vec<DataField>>;

/// Where a step's result lands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    None,
    Column(String),
    Metadata { column: String, key: String },
    View(String),
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::None => f.write_str("-"),
            Binding::Column(c) => f.write_str(c),
            Binding::Metadata { column, key } => write!(f, "{column}#{key}"),
            Binding::View(v) => write!(f, "view:{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    /// Unit transform family or a session-level kind; never composite.
    pub kind: OpKind,
    pub udf: Option<String>,
    pub inputs: Vec<String>,
    pub output: Binding,
    pub action: Option<Action>,
    /// Every parameter with defaults filled in.
    pub params: BTreeMap<String, Literal>,
    pub selection: Option<Selection>,
}

impl PlanStep {
    fn session(kind: OpKind, params: BTreeMap<String, Literal>) -> Self {
        Self { kind, udf: None, inputs: Vec::new(), output: Binding::None, action: None, params, selection: None }
    }

    /// Engine operator identifier, e.g. `project.lowercase`.
    pub fn op_name(&self) -> String {
        match &self.udf {
            Some(udf) => format!("{}.{udf}", self.kind.keyword()),
            None => self.kind.keyword().to_string(),
        }
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Literal::as_str)
    }

    pub fn param_i64(&self, key: &str) -> Option<i64> {
        self.params.get(key).and_then(Literal::as_i64)
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Literal::as_f64)
    }

    /// Chart parameters of a visualize step.
    pub fn chart_params(&self) -> Option<ChartParams> {
        let column = self.inputs.first()?.clone();
        match self.udf.as_deref()? {
            "bar" => Some(ChartParams::Bar(BarParams {
                column,
                metadata: self.param_str("metadata")?.to_string(),
                top_k: self.param_i64("top_k")? as usize,
                category: self.param_str("category")?.to_string(),
                value: self.param_str("value")?.to_string(),
            })),
            "scatter" => Some(ChartParams::Scatter(ScatterParams {
                column,
                color: self.param_str("color").map(str::to_string),
            })),
            _ => None,
        }
    }
}

/// A composite to add to the registry once the plan is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub name: String,
    /// Column-free `combine` node holding the pipeline.
    pub template: OperatorNode,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub registration: Option<Registration>,
}

/// Catalog entry for the operator palette.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorInfo {
    pub name: String,
    pub family: String,
    pub input: String,
    pub output: String,
    pub default_action: Option<String>,
    pub params: BTreeMap<String, String>,
}

struct Builtin {
    udf: &'static str,
    input: &'static str,
    output: &'static str,
    params: &'static [(&'static str, &'static str)],
}

const BUILTINS: &[Builtin] = &[
    Builtin { udf: "lowercase", input: "Text", output: "Text", params: &[] },
    Builtin { udf: "remove_stopwords", input: "Text", output: "Text", params: &[] },
    Builtin { udf: "strip_punct", input: "Text", output: "Text", params: &[] },
    Builtin { udf: "pca2", input: "Vector(Float)", output: "Vector(Float)", params: &[] },
    Builtin { udf: "tokenize", input: "Text", output: "List(String)", params: &[] },
    Builtin {
        udf: "tfidf",
        input: "Text | List(String)",
        output: "Vector(Float)",
        params: &[("min_df", "1"), ("norm", "\"l2\"")],
    },
    Builtin {
        udf: "lda",
        input: "Text | List(String)",
        output: "Vector(Float)",
        params: &[("k", "5"), ("iterations", "200"), ("seed", "0"), ("alpha", "50/k"), ("beta", "0.01")],
    },
    Builtin { udf: "cluster_assign", input: "Vector(Float)", output: "Int", params: &[] },
    Builtin { udf: "mean", input: "Int | Float | Text | List(String)", output: "Float", params: &[] },
    Builtin { udf: "sum", input: "Int | Float | Text | List(String)", output: "Int | Float", params: &[] },
    Builtin { udf: "count", input: "any", output: "Int", params: &[] },
    Builtin {
        udf: "mean_score_per_token",
        input: "Vector(Float) with vocabulary",
        output: "Dictionary(String,Float)",
        params: &[],
    },
    Builtin { udf: "unique_tokens", input: "Text | List(String)", output: "List(String)", params: &[] },
    Builtin {
        udf: "bar",
        input: "Dictionary(String,Float) metadata",
        output: "Visualization",
        params: &[("top_k", "15"), ("category", "\"token\""), ("value", "\"score\"")],
    },
    Builtin { udf: "scatter", input: "Vector(Float) of dimension 2", output: "Visualization", params: &[] },
];

/// Built-in operators plus named composites registered by `synthesize`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorRegistry {
    /// Name to canonical JSON of the stored pipeline.
    synthesized: BTreeMap<String, String>,
}

impl OperatorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Operator keywords and built-in udf names.
    pub fn is_builtin(name: &str) -> bool {
        !matches!(OpKind::from_keyword(name), OpKind::Named(_)) || builtin_udf_kind(name).is_some()
    }

    pub fn contains(&self, name: &str) -> bool {
        Self::is_builtin(name) || self.synthesized.contains_key(name)
    }

    pub fn synthesized_names(&self) -> impl Iterator<Item = &str> {
        self.synthesized.keys().map(String::as_str)
    }

    pub fn template(&self, name: &str) -> Option<OperatorNode> {
        let json = self.synthesized.get(name)?;
        Some(spec::parse_json(json.as_bytes()).expect("stored templates are canonical"))
    }

    pub fn describe(&self) -> Vec<OperatorInfo> {
        let mut out: Vec<OperatorInfo> = BUILTINS
            .iter()
            .map(|b| {
                let family = builtin_udf_kind(b.udf).expect("table lists built-ins");
                OperatorInfo {
                    name: b.udf.to_string(),
                    family: family.keyword().to_string(),
                    input: b.input.to_string(),
                    output: b.output.to_string(),
                    default_action: Some(default_action(&family).as_str().to_string()),
                    params: b.params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
                }
            })
            .collect();
        for (name, json) in &self.synthesized {
            let template = spec::parse_json(json.as_bytes()).expect("stored templates are canonical");
            let ops: Vec<String> = template.children.iter().map(|c| describe_child(c)).collect();
            out.push(OperatorInfo {
                name: name.clone(),
                family: "synthesize".into(),
                input: "column".into(),
                output: ops.join("; "),
                default_action: template.action.map(|a| a.as_str().to_string()),
                params: BTreeMap::new(),
            });
        }
        out
    }
}

fn describe_child(node: &OperatorNode) -> String {
    match &node.udf {
        Some(u) => format!("{} {u}", node.kind.keyword()),
        None => node.kind.keyword().to_string(),
    }
}

/// Adds `name` for the pipeline of `node` (a `synthesize` or `combine`).
pub fn register_synthesized(
    registry: &OperatorRegistry,
    name: &str,
    node: &OperatorNode,
) -> Result<OperatorRegistry, CompileError> {
    if registry.contains(name) {
        return Err(CompileError::new("$.name", K::DuplicateName(name.to_string())));
    }
    let template = template_of(node);
    check_generic(&template, registry, "$")?;
    let mut next = registry.clone();
    let json = String::from_utf8(spec::serialize(&template)).expect("canonical JSON is UTF-8");
    next.synthesized.insert(name.to_string(), json);
    Ok(next)
}

fn template_of(node: &OperatorNode) -> OperatorNode {
    let mut t = OperatorNode::new(OpKind::Combine);
    t.action = node.action;
    t.children = node.children.clone();
    t
}

/// Checks a pipeline without a schema: operators exist and explicit actions
/// suit their families.
fn check_generic(node: &OperatorNode, registry: &OperatorRegistry, path: &str) -> Result<(), CompileError> {
    match &node.kind {
        OpKind::Combine | OpKind::Synthesize => {
            for (i, child) in node.children.iter().enumerate() {
                check_generic(child, registry, &format!("{path}.ops[{i}]"))?;
            }
            Ok(())
        }
        OpKind::Named(name) => {
            if registry.synthesized.contains_key(name) {
                Ok(())
            } else {
                Err(CompileError::new(path, K::UnknownOperator(name.clone())))
            }
        }
        kind if kind.is_unit_transform() => {
            let udf = node.udf.as_deref().unwrap_or_default();
            if builtin_udf_kind(udf).as_ref() != Some(kind) {
                return Err(CompileError::new(path, K::UnknownOperator(format!("{} {udf}", kind.keyword()))));
            }
            if let Some(a) = node.action {
                if !action_fits(kind, a) {
                    return Err(CompileError::new(path, incompatible(kind, udf, a)));
                }
            }
            Ok(())
        }
        other => Err(CompileError::new(path, K::UnknownOperator(other.keyword().to_string()))),
    }
}

fn default_action(kind: &OpKind) -> Action {
    match kind {
        OpKind::Project => Action::Update,
        OpKind::Aggregate | OpKind::SetOp => Action::Add,
        _ => Action::Create,
    }
}

fn action_fits(kind: &OpKind, action: Action) -> bool {
    match kind {
        OpKind::Project | OpKind::Mutate => matches!(action, Action::Update | Action::Create),
        OpKind::Aggregate | OpKind::SetOp => action == Action::Add,
        OpKind::Visualize => action == Action::Create,
        _ => false,
    }
}

fn incompatible(kind: &OpKind, udf: &str, action: Action) -> K {
    K::ActionIncompatible { op: format!("{} {udf}", kind.keyword()), action: action.as_str().to_string() }
}

fn canonical_udf(udf: &str) -> &str {
    match udf {
        "mean_tfidf" => "mean_score_per_token",
        other => other,
    }
}

fn allowed_params(udf: &str) -> &'static [&'static str] {
    match udf {
        "tfidf" => &["out", "min_df", "norm"],
        "lda" => &["out", "k", "iterations", "seed", "alpha", "beta"],
        "mean" | "sum" | "count" | "mean_score_per_token" | "unique_tokens" => &["key"],
        "bar" => &["view", "metadata", "top_k", "category", "value"],
        "scatter" => &["view", "color"],
        _ => &["out"],
    }
}

/// Compiles `node` against the current frame schema, chart catalog and
/// registry. Pure: the registry is only extended through
/// [`Plan::registration`].
pub fn compile(
    node: &OperatorNode,
    schema: &FrameSchema,
    views: &ViewSchemas,
    registry: &OperatorRegistry,
) -> Result<Plan, CompileError> {
    let mut ctx = Ctx { schema: schema.clone(), views: views.clone(), registry, steps: Vec::new(), last_meta: None };
    let path = "$";
    match &node.kind {
        OpKind::Synthesize => {
            let name = node.name.clone().unwrap_or_default();
            let next = register_synthesized(registry, &name, node)?;
            if node.column.is_some() {
                let mut probe = template_of(node);
                probe.column = node.column.clone();
                ctx.pipe(&probe, path, &Inherit::default())?;
            }
            let template = next.template(&name).expect("just registered");
            return Ok(Plan { steps: Vec::new(), registration: Some(Registration { name, template }) });
        }
        OpKind::Select => ctx.select(node, path)?,
        OpKind::Coordinate => ctx.coordinate(node, path)?,
        OpKind::Undo => ctx.steps.push(PlanStep::session(OpKind::Undo, BTreeMap::new())),
        OpKind::Checkout => ctx.steps.push(PlanStep::session(OpKind::Checkout, node.params.clone())),
        OpKind::Clear => {
            let mut step = PlanStep::session(OpKind::Clear, BTreeMap::new());
            if let Some(view) = &node.view {
                ctx.require_view(view, "$.view")?;
                step.inputs.push(view.clone());
                step.output = Binding::View(view.clone());
            }
            ctx.steps.push(step);
        }
        OpKind::Load => {
            let mut params = node.params.clone();
            params.entry("name".into()).or_insert_with(|| Literal::Str("data".into()));
            params.entry("text_columns".into()).or_insert_with(|| Literal::List(Vec::new()));
            ctx.steps.push(PlanStep::session(OpKind::Load, params));
        }
        _ => {
            ctx.pipe(node, path, &Inherit::default())?;
        }
    }
    Ok(Plan { steps: ctx.steps, registration: None })
}

#[derive(Default, Clone)]
struct Inherit {
    column: Option<String>,
    action: Option<Action>,
}

struct Ctx<'a> {
    schema: FrameSchema,
    views: ViewSchemas,
    registry: &'a OperatorRegistry,
    steps: Vec<PlanStep>,
    /// Column and key of the most recent metadata produced in this plan.
    last_meta: Option<(String, String)>,
}

fn err(path: &str, kind: K) -> CompileError {
    CompileError::new(path, kind)
}

fn invalid(path: &str, name: &str, reason: impl Into<String>) -> CompileError {
    err(&format!("{path}.params.{name}"), K::InvalidParam { name: name.to_string(), reason: reason.into() })
}

impl Ctx<'_> {
    /// Compiles a pipeline member; returns the column later members continue on.
    fn pipe(&mut self, node: &OperatorNode, path: &str, inh: &Inherit) -> Result<Option<String>, CompileError> {
        match &node.kind {
            OpKind::Combine => {
                let mut inner = Inherit {
                    column: node.column.clone().or_else(|| inh.column.clone()),
                    action: node.action.or(inh.action),
                };
                if !node.params.is_empty() {
                    let key = node.params.keys().next().expect("non-empty");
                    return Err(invalid(path, key, "combine takes no parameters"));
                }
                for (i, child) in node.children.iter().enumerate() {
                    if let Some(out) = self.pipe(child, &format!("{path}.ops[{i}]"), &inner)? {
                        inner.column = Some(out);
                    }
                }
                Ok(inner.column)
            }
            OpKind::Named(name) => {
                let template = self
                    .registry
                    .template(name)
                    .ok_or_else(|| err(path, K::UnknownOperator(name.clone())))?;
                if let Some(key) = node.params.keys().next() {
                    return Err(invalid(path, key, format!("`{name}` takes no parameters")));
                }
                let mut expanded = template;
                expanded.column = node.column.clone();
                expanded.action = node.action.or(expanded.action);
                self.pipe(&expanded, path, inh)
            }
            kind if kind.is_unit_transform() => self.unit(node, path, inh),
            other => Err(err(path, K::UnknownOperator(other.keyword().to_string()))),
        }
    }

    fn resolve_column(&self, explicit: Option<&String>, path: &str) -> Result<ColumnSchema, CompileError> {
        match explicit {
            Some(name) => self
                .schema
                .column(name)
                .cloned()
                .ok_or_else(|| err(path, K::UnknownColumn(name.clone()))),
            None => {
                let mut text = self.schema.text_columns();
                match (text.next(), text.next()) {
                    (Some(c), None) => Ok(c.clone()),
                    _ => Err(err(path, K::UnknownColumn("<no column given and no single Text column>".into()))),
                }
            }
        }
    }

    fn unit(&mut self, node: &OperatorNode, path: &str, inh: &Inherit) -> Result<Option<String>, CompileError> {
        let kind = node.kind.clone();
        let raw = node.udf.as_deref().unwrap_or_default();
        let udf = canonical_udf(raw);
        if builtin_udf_kind(udf).as_ref() != Some(&kind) {
            return Err(err(path, K::UnknownOperator(format!("{} {raw}", kind.keyword()))));
        }
        let action = match node.action {
            Some(a) if action_fits(&kind, a) => a,
            Some(a) => return Err(err(path, incompatible(&kind, udf, a))),
            None => inh.action.filter(|a| action_fits(&kind, *a)).unwrap_or_else(|| default_action(&kind)),
        };
        let allowed = allowed_params(udf);
        if let Some(key) = node.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid(path, key, format!("not a parameter of `{udf}`")));
        }
        let col = self.resolve_column(node.column.as_ref().or(inh.column.as_ref()), path)?;
        let step_name = format!("{} {udf}", kind.keyword());
        let type_error = |expected: &str| {
            err(path, K::TypeError { step: step_name.clone(), expected: expected.to_string(), found: col.dtype.to_string() })
        };
        let is_vector = matches!(col.dtype, DomainType::Vector(_));
        let is_docs = col.dtype == DomainType::Text || col.dtype == DomainType::tokens();

        let mut step = PlanStep {
            kind: kind.clone(),
            udf: Some(udf.to_string()),
            inputs: vec![col.name.clone()],
            output: Binding::None,
            action: Some(action),
            params: BTreeMap::new(),
            selection: None,
        };

        match kind {
            OpKind::Project | OpKind::Mutate => {
                let (ok, expected, out_type) = match udf {
                    "lowercase" | "remove_stopwords" | "strip_punct" => {
                        (col.dtype == DomainType::Text, "Text", DomainType::Text)
                    }
                    "tokenize" => (col.dtype == DomainType::Text, "Text", DomainType::tokens()),
                    "tfidf" | "lda" => (is_docs, "Text or List(String)", DomainType::vector(DomainType::Float)),
                    "pca2" => (is_vector, "Vector(Float)", DomainType::vector(DomainType::Float)),
                    "cluster_assign" => (is_vector, "Vector(Float)", DomainType::Int),
                    _ => unreachable!("udf family checked above"),
                };
                if !ok {
                    return Err(type_error(expected));
                }
                self.transform_params(udf, node, path, &mut step)?;
                let out = match action {
                    Action::Update => {
                        if node.params.contains_key("out") {
                            return Err(invalid(path, "out", "only applies with action create"));
                        }
                        let c = self.schema.column_mut(&col.name).expect("resolved above");
                        c.dtype = out_type;
                        c.metadata.clear();
                        col.name.clone()
                    }
                    _ => {
                        let name = match node.params.get("out") {
                            Some(Literal::Str(s)) if spec::is_identifier(s) => s.clone(),
                            Some(_) => return Err(invalid(path, "out", "expected an identifier")),
                            None => format!("{}_{udf}", col.name),
                        };
                        if self.schema.column(&name).is_some() {
                            return Err(invalid(path, "out", format!("column `{name}` already exists")));
                        }
                        self.schema.columns.push(ColumnSchema { name: name.clone(), dtype: out_type, metadata: BTreeMap::new() });
                        name
                    }
                };
                let meta = &mut self.schema.column_mut(&out).expect("output column exists").metadata;
                match udf {
                    "tfidf" => {
                        meta.insert(VOCABULARY_META.into(), DomainType::tokens());
                        meta.insert(IDF_META.into(), DomainType::vector(DomainType::Float));
                    }
                    "cluster_assign" => {
                        meta.insert(CLUSTERS_META.into(), DomainType::Int);
                    }
                    _ => {}
                }
                step.output = Binding::Column(out.clone());
                self.steps.push(step);
                Ok(Some(out))
            }
            OpKind::Aggregate | OpKind::SetOp => {
                let out_type = match udf {
                    "count" => DomainType::Int,
                    "sum" | "mean" if !(col.dtype.is_numeric() || is_docs) => {
                        return Err(type_error("Int, Float, Text or List(String)"))
                    }
                    "sum" if col.dtype == DomainType::Int => DomainType::Int,
                    "sum" | "mean" => DomainType::Float,
                    "mean_score_per_token" => {
                        if !is_vector || !col.metadata.contains_key(VOCABULARY_META) {
                            return Err(type_error("TF-IDF Vector(Float) with a vocabulary"));
                        }
                        DomainType::dictionary(DomainType::String, DomainType::Float)
                    }
                    "unique_tokens" if is_docs => DomainType::tokens(),
                    "unique_tokens" => return Err(type_error("Text or List(String)")),
                    _ => unreachable!("udf family checked above"),
                };
                let key = match node.params.get("key") {
                    Some(Literal::Str(s)) if !s.is_empty() => s.clone(),
                    Some(_) => return Err(invalid(path, "key", "expected a non-empty string")),
                    None => udf.to_string(),
                };
                step.params.insert("key".into(), Literal::Str(key.clone()));
                self.schema
                    .column_mut(&col.name)
                    .expect("resolved above")
                    .metadata
                    .insert(key.clone(), out_type);
                step.output = Binding::Metadata { column: col.name.clone(), key: key.clone() };
                self.last_meta = Some((col.name.clone(), key));
                self.steps.push(step);
                Ok(None)
            }
            OpKind::Visualize => {
                let view = self.view_id(node, path)?;
                let fields = if udf == "bar" {
                    if !(is_vector || is_docs) {
                        return Err(type_error("a token, text or TF-IDF column"));
                    }
                    self.bar_params(node, path, &col, &mut step)?
                } else {
                    if !is_vector {
                        return Err(type_error("Vector(Float) of dimension 2"));
                    }
                    self.scatter_params(node, path, &mut step)?
                };
                step.params.insert("view".into(), Literal::Str(view.clone()));
                step.output = Binding::View(view.clone());
                self.views.insert(view, fields);
                self.steps.push(step);
                Ok(None)
            }
            _ => unreachable!("unit transforms only"),
        }
    }

    fn transform_params(&self, udf: &str, node: &OperatorNode, path: &str, step: &mut PlanStep) -> Result<(), CompileError> {
        let int_param = |name: &str, default: i64, min: i64| -> Result<Literal, CompileError> {
            match node.params.get(name) {
                None => Ok(Literal::Int(default)),
                Some(Literal::Int(i)) if *i >= min => Ok(Literal::Int(*i)),
                Some(_) => Err(invalid(path, name, format!("expected an integer >= {min}"))),
            }
        };
        let pos_float = |name: &str, default: f64| -> Result<Literal, CompileError> {
            match node.params.get(name) {
                None => Ok(Literal::Float(default)),
                Some(lit) => match lit.as_f64() {
                    Some(x) if x > 0.0 && x.is_finite() => Ok(Literal::Float(x)),
                    _ => Err(invalid(path, name, "expected a positive number")),
                },
            }
        };
        match udf {
            "tfidf" => {
                step.params.insert("min_df".into(), int_param("min_df", 1, 1)?);
                let norm = match node.params.get("norm") {
                    None => Norm::L2,
                    Some(Literal::Str(s)) => Norm::parse(s).ok_or_else(|| invalid(path, "norm", "expected \"l2\" or \"none\""))?,
                    Some(_) => return Err(invalid(path, "norm", "expected \"l2\" or \"none\"")),
                };
                step.params.insert("norm".into(), Literal::Str(norm.as_str().into()));
            }
            "lda" => {
                let k = int_param("k", DEFAULT_LDA_K, 2)?;
                let kf = k.as_f64().expect("int literal");
                step.params.insert("k".into(), k);
                step.params.insert("iterations".into(), int_param("iterations", lda::DEFAULT_ITERATIONS as i64, 1)?);
                step.params.insert("seed".into(), int_param("seed", DEFAULT_LDA_SEED, 0)?);
                step.params.insert("alpha".into(), pos_float("alpha", 50.0 / kf)?);
                step.params.insert("beta".into(), pos_float("beta", lda::DEFAULT_BETA)?);
            }
            _ => {}
        }
        Ok(())
    }

    fn view_id(&self, node: &OperatorNode, path: &str) -> Result<String, CompileError> {
        let explicit = match (node.view.as_deref(), node.params.get("view")) {
            (Some(a), Some(Literal::Str(b))) if a != b => {
                return Err(invalid(path, "view", "conflicts with the node's view"));
            }
            (Some(a), _) => Some(a.to_string()),
            (None, Some(Literal::Str(b))) => Some(b.clone()),
            (None, Some(_)) => return Err(invalid(path, "view", "expected an identifier")),
            (None, None) => None,
        };
        match explicit {
            Some(v) if !spec::is_identifier(&v) => Err(invalid(path, "view", "expected an identifier")),
            Some(v) if v == TABLE_VIEW || self.views.contains_key(&v) => {
                Err(invalid(path, "view", format!("view `{v}` already exists")))
            }
            Some(v) => Ok(v),
            None => Ok((self.views.len() + 1..)
                .map(|n| format!("v{n}"))
                .find(|v| !self.views.contains_key(v))
                .expect("unbounded range")),
        }
    }

    fn bar_params(
        &self,
        node: &OperatorNode,
        path: &str,
        col: &ColumnSchema,
        step: &mut PlanStep,
    ) -> Result<Vec<DataField>, CompileError> {
        let is_dict = |key: &str| matches!(col.metadata.get(key), Some(DomainType::Dictionary(_, _)));
        let metadata = match node.params.get("metadata") {
            Some(Literal::Str(key)) => {
                if !col.metadata.contains_key(key) {
                    return Err(err(path, K::MissingBinding(format!("metadata `{key}` on `{}`", col.name))));
                }
                key.clone()
            }
            Some(_) => return Err(invalid(path, "metadata", "expected a metadata key")),
            None => {
                let recent = self
                    .last_meta
                    .as_ref()
                    .filter(|(c, k)| *c == col.name && is_dict(k))
                    .map(|(_, k)| k.clone());
                let dicts: Vec<&String> = col.metadata.keys().filter(|k| is_dict(k)).collect();
                recent
                    .or_else(|| is_dict("mean_score_per_token").then(|| "mean_score_per_token".to_string()))
                    .or_else(|| (dicts.len() == 1).then(|| dicts[0].clone()))
                    .ok_or_else(|| {
                        err(path, K::MissingBinding(format!("no score dictionary on `{}`; aggregate one first", col.name)))
                    })?
            }
        };
        match col.metadata.get(&metadata) {
            Some(DomainType::Dictionary(_, v)) if v.is_numeric() => {}
            Some(other) => {
                return Err(err(path, K::TypeError {
                    step: "visualize bar".into(),
                    expected: "Dictionary(String,Float) metadata".into(),
                    found: other.to_string(),
                }))
            }
            None => unreachable!("checked above"),
        }
        let top_k = match node.params.get("top_k") {
            None => DEFAULT_TOP_K,
            Some(Literal::Int(k)) if *k >= 1 => *k,
            Some(_) => return Err(invalid(path, "top_k", "expected an integer >= 1")),
        };
        let field = |name: &str, default: &str| -> Result<String, CompileError> {
            match node.params.get(name) {
                None => Ok(default.to_string()),
                Some(Literal::Str(s)) if spec::is_identifier(s) => Ok(s.clone()),
                Some(_) => Err(invalid(path, name, "expected an identifier")),
            }
        };
        let category = field("category", DEFAULT_CATEGORY_FIELD)?;
        let value = field("value", DEFAULT_VALUE_FIELD)?;
        if category == value {
            return Err(invalid(path, "value", "must differ from category"));
        }
        step.params.insert("metadata".into(), Literal::Str(metadata));
        step.params.insert("top_k".into(), Literal::Int(top_k));
        step.params.insert("category".into(), Literal::Str(category.clone()));
        step.params.insert("value".into(), Literal::Str(value.clone()));
        Ok(vec![
            DataField { name: category, dtype: DomainType::String },
            DataField { name: value, dtype: DomainType::Float },
        ])
    }

    fn scatter_params(&self, node: &OperatorNode, path: &str, step: &mut PlanStep) -> Result<Vec<DataField>, CompileError> {
        let color = match node.params.get("color") {
            Some(Literal::Str(c)) => {
                let schema = self.schema.column(c).ok_or_else(|| err(path, K::UnknownColumn(c.clone())))?;
                Some(schema.clone())
            }
            Some(_) => return Err(invalid(path, "color", "expected a column name")),
            None => self.schema.columns.iter().rev().find(|c| c.metadata.contains_key(CLUSTERS_META)).cloned(),
        };
        let mut fields = vec![
            DataField { name: "row_id".into(), dtype: DomainType::Int },
            DataField { name: "x".into(), dtype: DomainType::Float },
            DataField { name: "y".into(), dtype: DomainType::Float },
        ];
        if let Some(c) = color {
            step.inputs.push(c.name.clone());
            step.params.insert("color".into(), Literal::Str(c.name));
            fields.push(DataField { name: "cluster".into(), dtype: c.dtype });
        }
        Ok(fields)
    }

    fn field_type(&self, view: &str, field: &str, path: &str) -> Result<DomainType, CompileError> {
        if view == TABLE_VIEW {
            if let Some(c) = self.schema.column(field) {
                return Ok(c.dtype.clone());
            }
            if field == "row_id" {
                return Ok(DomainType::Int);
            }
            return Err(err(path, K::UnknownColumn(field.to_string())));
        }
        let fields = self.views.get(view).ok_or_else(|| err(path, K::UnknownView(view.to_string())))?;
        fields
            .iter()
            .find(|f| f.name == field)
            .map(|f| f.dtype.clone())
            .ok_or_else(|| err(path, K::UnknownColumn(format!("{view}.{field}"))))
    }

    fn require_view(&self, view: &str, path: &str) -> Result<(), CompileError> {
        if view == TABLE_VIEW || self.views.contains_key(view) {
            Ok(())
        } else {
            Err(err(path, K::UnknownView(view.to_string())))
        }
    }

    fn select(&mut self, node: &OperatorNode, path: &str) -> Result<(), CompileError> {
        let view = node.view.clone().unwrap_or_default();
        self.require_view(&view, &format!("{path}.view"))?;
        let sel = node.selection.clone().expect("validated select carries a selection");
        let spath = format!("{path}.selection");
        let dtype = self.field_type(&view, &sel.predicate.field, &spath)?;
        predicate::check(&dtype, &sel.predicate, sel.kind).map_err(|_| {
            err(&spath, K::TypeError {
                step: "select".into(),
                expected: format!("a predicate applicable to `{}`", sel.predicate.field),
                found: dtype.to_string(),
            })
        })?;
        let mut params = BTreeMap::from([
            ("kind".to_string(), Literal::Str(sel.kind.as_str().into())),
            ("field".to_string(), Literal::Str(sel.predicate.field.clone())),
            ("op".to_string(), Literal::Str(sel.predicate.op.as_str().into())),
            ("value".to_string(), sel.predicate.value.clone()),
        ]);
        if let Some(tag) = sel.mapping_tag {
            params.insert("type".into(), Literal::Str(tag.as_str().into()));
        }
        self.steps.push(PlanStep {
            kind: OpKind::Select,
            udf: None,
            inputs: vec![view.clone()],
            output: Binding::View(view),
            action: None,
            params,
            selection: Some(sel),
        });
        Ok(())
    }

    fn coordinate(&mut self, node: &OperatorNode, path: &str) -> Result<(), CompileError> {
        let source = node.view.clone().unwrap_or_default();
        let target = node.param_str("target").unwrap_or_default().to_string();
        let on = node.param_str("on").unwrap_or_default().to_string();
        self.require_view(&source, &format!("{path}.view"))?;
        self.require_view(&target, &format!("{path}.params.target"))?;
        self.field_type(&source, &on, &format!("{path}.params.on"))?;
        let tag = |key: &str, default: MappingTag| {
            node.param_str(key).and_then(MappingTag::parse).unwrap_or(default)
        };
        let params = BTreeMap::from([
            ("target".to_string(), Literal::Str(target.clone())),
            ("on".to_string(), Literal::Str(on)),
            ("source_type".to_string(), Literal::Str(tag("source_type", MappingTag::Single).as_str().into())),
            ("type".to_string(), Literal::Str(tag("type", MappingTag::Multi).as_str().into())),
        ]);
        self.steps.push(PlanStep {
            kind: OpKind::Coordinate,
            udf: None,
            inputs: vec![source],
            output: Binding::View(target),
            action: None,
            params,
            selection: None,
        });
        Ok(())
    }
}

/// One line per step: `step <i>: <op> (<in> -> <out>) action=<a> params={k=v,...}`.
pub fn explain(plan: &Plan) -> String {
    let mut out = String::new();
    for (i, step) in plan.steps.iter().enumerate() {
        let params: Vec<String> = step.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!(
            "step {}: {} ({} -> {}) action={} params={{{}}}\n",
            i + 1,
            step.op_name(),
            if step.inputs.is_empty() { "-".to_string() } else { step.inputs.join(",") },
            step.output,
            step.action.map_or("none", Action::as_str),
            params.join(","),
        ));
    }
    if let Some(reg) = &plan.registration {
        let ops: Vec<String> = reg.template.children.iter().map(describe_child).collect();
        out.push_str(&format!("register {} = [{}]\n", reg.name, ops.join("; ")));
    }
    out
}
