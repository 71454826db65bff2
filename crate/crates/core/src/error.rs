use thiserror::Error;

use crate::types::DomainType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("column `{0}` already exists")]
    DuplicateColumn(String),
    #[error("column `{0}` does not exist")]
    UnknownColumn(String),
    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("value at {location} does not conform to {expected}")]
    TypeMismatch { location: String, expected: DomainType },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("CSV parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("text column `{0}` not present in header")]
    MissingTextColumn(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Errors from either operator surface (JSON or command line).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("syntax error at {position}: {message}{}", expected_suffix(.expected))]
    Syntax { position: usize, message: String, expected: Vec<String> },
    #[error("schema error at `{path}`: {reason}")]
    Schema { path: String, reason: String },
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileErrorKind {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("step `{step}` expected {expected}, found {found}")]
    TypeError { step: String, expected: String, found: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unknown view `{0}`")]
    UnknownView(String),
    #[error("action `{action}` is not compatible with `{op}`")]
    ActionIncompatible { op: String, action: String },
    #[error("operator name `{0}` is already registered")]
    DuplicateName(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("missing binding: {0}")]
    MissingBinding(String),
}

/// A compile failure and the node path (e.g. `ops[1]`) that caused it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} (at {path})")]
pub struct CompileError {
    pub path: String,
    pub kind: CompileErrorKind,
}

impl CompileError {
    pub fn new(path: impl Into<String>, kind: CompileErrorKind) -> Self {
        Self { path: path.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("`{op}` expected {expected}, found {found}")]
    TypeError { op: String, expected: String, found: String },
    #[error("vocabulary is empty after min_df filtering")]
    EmptyVocabulary,
    #[error("aggregate over empty input")]
    EmptyInput,
    #[error("invalid topic count {0}; need K >= 2")]
    InvalidK(usize),
    #[error("corpus has {nonempty} non-empty documents, need at least {needed}")]
    EmptyCorpus { nonempty: usize, needed: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("missing binding: {0}")]
    MissingBinding(String),
    #[error("unknown engine operator `{0}`")]
    UnknownOp(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Coordination(#[from] CoordError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordError {
    #[error("unknown view `{0}`")]
    UnknownView(String),
    #[error("link {0} -> {1} already exists or is a self link")]
    DuplicateLink(String, String),
    #[error("link {0} -> {1} would create a cycle")]
    CycleError(String, String),
    #[error("predicate error: {0}")]
    PredicateError(String),
    #[error("mapping error: {0}")]
    IncompatibleMapping(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VersionError {
    #[error("storage error: {0}")]
    Storage(String),
    #[error("unknown version {0}")]
    UnknownVersion(u64),
}

impl From<std::io::Error> for VersionError {
    fn from(e: std::io::Error) -> Self {
        VersionError::Storage(e.to_string())
    }
}

/// Umbrella error carried through the session pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VitaError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Version(#[from] VersionError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("range error: {0}")]
    Range(String),
}

impl From<FrameError> for VitaError {
    fn from(e: FrameError) -> Self {
        VitaError::Engine(EngineError::Frame(e))
    }
}

impl From<CoordError> for VitaError {
    fn from(e: CoordError) -> Self {
        VitaError::Engine(EngineError::Coordination(e))
    }
}

impl VitaError {
    /// Pipeline stage that produced the error.
    pub fn stage(&self) -> &'static str {
        match self {
            VitaError::Spec(_) => "parse",
            VitaError::Compile(_) => "compile",
            VitaError::Engine(_) => "engine",
            VitaError::Version(_) => "version",
            VitaError::Load(_) => "load",
            VitaError::UnknownSession(_) | VitaError::Range(_) => "session",
        }
    }

    /// Stable variant name, e.g. `UnknownOperator`.
    pub fn kind(&self) -> &'static str {
        match self {
            VitaError::Spec(SpecError::Syntax { .. }) => "SyntaxError",
            VitaError::Spec(SpecError::Schema { .. }) => "SchemaError",
            VitaError::Compile(c) => match c.kind {
                CompileErrorKind::UnknownOperator(_) => "UnknownOperator",
                CompileErrorKind::TypeError { .. } => "TypeError",
                CompileErrorKind::UnknownColumn(_) => "UnknownColumn",
                CompileErrorKind::UnknownView(_) => "UnknownView",
                CompileErrorKind::ActionIncompatible { .. } => "ActionIncompatible",
                CompileErrorKind::DuplicateName(_) => "DuplicateName",
                CompileErrorKind::InvalidParam { .. } => "InvalidParam",
                CompileErrorKind::MissingBinding(_) => "MissingBinding",
            },
            VitaError::Engine(e) => engine_kind(e),
            VitaError::Version(VersionError::Storage(_)) => "StorageError",
            VitaError::Version(VersionError::UnknownVersion(_)) => "UnknownVersion",
            VitaError::Load(_) => "ParseError",
            VitaError::UnknownSession(_) => "UnknownSession",
            VitaError::Range(_) => "RangeError",
        }
    }
}

fn engine_kind(e: &EngineError) -> &'static str {
    match e {
        EngineError::TypeError { .. } => "TypeError",
        EngineError::EmptyVocabulary => "EmptyVocabulary",
        EngineError::EmptyInput => "EmptyInput",
        EngineError::InvalidK(_) => "InvalidK",
        EngineError::EmptyCorpus { .. } => "EmptyCorpus",
        EngineError::DegenerateInput(_) => "DegenerateInput",
        EngineError::UnknownField(_) => "UnknownField",
        EngineError::MissingBinding(_) => "MissingBinding",
        EngineError::UnknownOp(_) => "UnknownOperator",
        EngineError::Frame(FrameError::DuplicateColumn(_)) => "DuplicateColumn",
        EngineError::Frame(FrameError::UnknownColumn(_)) => "UnknownColumn",
        EngineError::Frame(FrameError::LengthMismatch { .. }) => "LengthMismatch",
        EngineError::Frame(FrameError::TypeMismatch { .. }) => "TypeMismatch",
        EngineError::Load(_) => "ParseError",
        EngineError::Coordination(c) => match c {
            CoordError::UnknownView(_) => "UnknownView",
            CoordError::DuplicateLink(..) => "DuplicateLink",
            CoordError::CycleError(..) => "CycleError",
            CoordError::PredicateError(_) => "PredicateError",
            CoordError::IncompatibleMapping(_) => "IncompatibleMapping",
        },
    }
}
