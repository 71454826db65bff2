use std::collections::BTreeMap;
use std::fmt;

/// Operator family of a node. `Named` invokes a synthesized operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OpKind {
    Select,
    Project,
    Mutate,
    Aggregate,
    SetOp,
    Visualize,
    Combine,
    Synthesize,
    Coordinate,
    Load,
    Undo,
    Checkout,
    Clear,
    Named(String),
}

impl OpKind {
    pub fn keyword(&self) -> &str {
        match self {
            OpKind::Select => "select",
            OpKind::Project => "project",
            OpKind::Mutate => "mutate",
            OpKind::Aggregate => "aggregate",
            OpKind::SetOp => "set",
            OpKind::Visualize => "visualize",
            OpKind::Combine => "combine",
            OpKind::Synthesize => "synthesize",
            OpKind::Coordinate => "coordinate",
            OpKind::Load => "load",
            OpKind::Undo => "undo",
            OpKind::Checkout => "checkout",
            OpKind::Clear => "clear",
            OpKind::Named(name) => name,
        }
    }

    /// Maps an operator string; identifiers that are not keywords become `Named`.
    pub fn from_keyword(s: &str) -> OpKind {
        match s {
            "select" => OpKind::Select,
            "project" => OpKind::Project,
            "mutate" => OpKind::Mutate,
            "aggregate" => OpKind::Aggregate,
            "set" => OpKind::SetOp,
            "visualize" => OpKind::Visualize,
            "combine" => OpKind::Combine,
            "synthesize" => OpKind::Synthesize,
            "coordinate" => OpKind::Coordinate,
            "load" => OpKind::Load,
            "undo" => OpKind::Undo,
            "checkout" => OpKind::Checkout,
            "clear" => OpKind::Clear,
            other => OpKind::Named(other.to_string()),
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, OpKind::Combine | OpKind::Synthesize)
    }

    /// Unit transformations that take a `udf`.
    pub fn is_unit_transform(&self) -> bool {
        matches!(
            self,
            OpKind::Project | OpKind::Mutate | OpKind::Aggregate | OpKind::SetOp | OpKind::Visualize
        )
    }

    /// Kinds that never carry an action.
    pub fn is_actionless(&self) -> bool {
        matches!(
            self,
            OpKind::Select | OpKind::Coordinate | OpKind::Load | OpKind::Undo | OpKind::Checkout | OpKind::Clear
        )
    }

    /// Kinds that may appear inside a pipeline.
    pub fn is_pipeline_member(&self) -> bool {
        self.is_unit_transform() || matches!(self, OpKind::Combine | OpKind::Named(_))
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Transformation family of each built-in user-defined function.
pub fn builtin_udf_kind(udf: &str) -> Option<OpKind> {
    Some(match udf {
        "lowercase" | "remove_stopwords" | "strip_punct" | "pca2" => OpKind::Project,
        "tokenize" | "tfidf" | "lda" | "cluster_assign" => OpKind::Mutate,
        "mean" | "sum" | "count" | "mean_score_per_token" | "mean_tfidf" => OpKind::Aggregate,
        "unique_tokens" => OpKind::SetOp,
        "bar" | "scatter" => OpKind::Visualize,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Add,
    Create,
    Update,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Add => "add",
            Action::Create => "create",
            Action::Update => "update",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        match s {
            "add" => Some(Action::Add),
            "create" => Some(Action::Create),
            "update" => Some(Action::Update),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    List(Vec<Literal>),
}

impl Literal {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Literal::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Literal::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => write!(f, "{s:?}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionKind {
    Single,
    List,
    Interval,
}

impl SelectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionKind::Single => "single",
            SelectionKind::List => "list",
            SelectionKind::Interval => "interval",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(SelectionKind::Single),
            "list" => Some(SelectionKind::List),
            "interval" => Some(SelectionKind::Interval),
            _ => None,
        }
    }
}

/// Cardinality tag of one side of a coordination mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingTag {
    Single,
    Multi,
}

impl MappingTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingTag::Single => "single",
            MappingTag::Multi => "multi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(MappingTag::Single),
            "multi" => Some(MappingTag::Multi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
    In,
}

impl CmpOp {
    pub const ALL: [CmpOp; 8] =
        [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Contains, CmpOp::In];

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Contains => "contains",
            CmpOp::In => "in",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CmpOp::ALL.into_iter().find(|op| op.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub field: String,
    pub op: CmpOp,
    pub value: Literal,
}

/// Selection criteria attached to a `select` node; the view lives on the node.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub kind: SelectionKind,
    pub predicate: Predicate,
    pub mapping_tag: Option<MappingTag>,
}

impl Selection {
    /// `(low, high)` bounds of an interval selection.
    pub fn interval_bounds(&self) -> Option<(f64, f64)> {
        match (&self.predicate.op, &self.predicate.value) {
            (CmpOp::In, Literal::List(items)) if items.len() == 2 => {
                Some((items[0].as_f64()?, items[1].as_f64()?))
            }
            _ => None,
        }
    }
}

/// Uniform parsed representation of any operator, from either surface.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorNode {
    pub kind: OpKind,
    /// `None` when omitted; the compiler fills in the default.
    pub action: Option<Action>,
    pub column: Option<String>,
    pub view: Option<String>,
    pub udf: Option<String>,
    pub params: BTreeMap<String, Literal>,
    pub children: Vec<OperatorNode>,
    /// Name a `synthesize` node registers.
    pub name: Option<String>,
    pub selection: Option<Selection>,
}

impl OperatorNode {
    pub fn new(kind: OpKind) -> Self {
        Self {
            kind,
            action: None,
            column: None,
            view: None,
            udf: None,
            params: BTreeMap::new(),
            children: Vec::new(),
            name: None,
            selection: None,
        }
    }

    /// Unit transform `kind(udf)` on `column`.
    pub fn unit(kind: OpKind, udf: &str) -> Self {
        let mut node = Self::new(kind);
        node.udf = Some(udf.to_string());
        node
    }

    pub fn on_column(mut self, column: &str) -> Self {
        self.column = Some(column.to_string());
        self
    }

    pub fn with_action(mut self, action: Action) -> Self {
        self.action = Some(action);
        self
    }

    pub fn with_param(mut self, key: &str, value: Literal) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Literal::as_str)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
