//! Line-oriented command surface.
//!
//! ```text
//! command    := load | transform | select | coordinate | "undo" | "checkout" INT | "clear" [IDENT]
//! load       := "load" STRING "as" IDENT ["text" "(" NAME {"," NAME} ")"]
//! transform  := KIND NAME ACTION (IDENT | "[" item {";" item} "]") ["with" params]
//! item       := transform | IDENT ["with" params]
//! select     := "select" IDENT ("single"|"list"|"interval") "where" predicate ["as" TAG]
//! coordinate := "coordinate" IDENT "->" IDENT "on" NAME ["as" TAG]
//! NAME       := IDENT | STRING
//! ```
//!
//! A bare `IDENT` inside brackets is a built-in udf (its transformation
//! family is looked up) or the name of a synthesized operator. Invocations of
//! synthesized operators take no tail: `clean Review update`.

use std::collections::BTreeMap;

use super::ast::*;
use super::validate;
use crate::error::SpecError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Float(f64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

const SYMBOLS: [&str; 14] = ["->", "==", "!=", "<=", ">=", "<", ">", "[", "]", "(", ")", ";", ",", "="];

fn syntax(position: usize, message: impl Into<String>, expected: &[&str]) -> SpecError {
    SpecError::Syntax {
        position,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>, SpecError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), pos: start });
        } else if c.is_ascii_digit() || (c == b'-' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_float = false;
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                is_float = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let tok = if is_float {
                let x: f64 = text.parse().map_err(|_| syntax(start, "invalid number", &[]))?;
                if !x.is_finite() {
                    return Err(syntax(start, "number out of range", &[]));
                }
                Tok::Float(x)
            } else {
                Tok::Int(text.parse().map_err(|_| syntax(start, "integer out of range", &[]))?)
            };
            out.push(Token { tok, pos: start });
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(syntax(start, "unterminated string literal", &["\""]));
                };
                i += ch.len_utf8();
                match ch {
                    '"' => break,
                    '\\' => {
                        let Some(esc) = src[i..].chars().next() else {
                            return Err(syntax(i, "unterminated escape", &[]));
                        };
                        i += esc.len_utf8();
                        s.push(match esc {
                            '"' => '"',
                            '\\' => '\\',
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            _ => return Err(syntax(i - esc.len_utf8() - 1, "invalid escape", &["\\\"", "\\\\", "\\n", "\\t", "\\r"])),
                        });
                    }
                    other => s.push(other),
                }
            }
            out.push(Token { tok: Tok::Str(s), pos: start });
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            out.push(Token { tok: Tok::Sym(sym), pos: start });
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(syntax(start, format!("unexpected character {ch:?}"), &[]));
        }
    }
    out.push(Token { tok: Tok::Eof, pos: src.len() });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.tokens[(self.at + n).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: &str, expected: &[&str]) -> SpecError {
        let found = match &self.peek().tok {
            Tok::Eof => "end of input".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::Int(_) | Tok::Float(_) => "number".to_string(),
        };
        syntax(self.peek().pos, format!("{message}, found {found}"), expected)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek().tok, Tok::Sym(s) if s == sym)
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn expect_sym(&mut self, sym: &'static str) -> Result<(), SpecError> {
        if self.is_sym(sym) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{sym}`"), &[sym]))
        }
    }

    fn expect_word(&mut self, word: &'static str) -> Result<(), SpecError> {
        if self.is_word(word) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{word}`"), &[word]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SpecError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&format!("expected {what}"), &["identifier"])),
        }
    }

    /// Column or field name: an identifier or a quoted string.
    fn name(&mut self, what: &str) -> Result<String, SpecError> {
        match &self.peek().tok {
            Tok::Ident(s) | Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&format!("expected {what}"), &["identifier", "string"])),
        }
    }

    fn one_of<T>(&mut self, what: &str, options: &[&'static str], parse: fn(&str) -> Option<T>) -> Result<T, SpecError> {
        if let Tok::Ident(s) = &self.peek().tok {
            if let Some(v) = parse(s) {
                self.bump();
                return Ok(v);
            }
        }
        Err(self.error(&format!("expected {what}"), options))
    }

    fn command(&mut self) -> Result<OperatorNode, SpecError> {
        let head = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => {
                return Err(self.error(
                    "expected a command",
                    &["load", "select", "coordinate", "undo", "checkout", "clear", "operator name"],
                ))
            }
        };
        let node = match head.as_str() {
            "load" => self.load()?,
            "select" => self.select()?,
            "coordinate" => self.coordinate()?,
            "undo" => {
                self.bump();
                OperatorNode::new(OpKind::Undo)
            }
            "clear" => {
                self.bump();
                let mut node = OperatorNode::new(OpKind::Clear);
                if matches!(self.peek().tok, Tok::Ident(_)) {
                    node.view = Some(self.ident("a view id")?);
                }
                node
            }
            "checkout" => {
                self.bump();
                match self.peek().tok {
                    Tok::Int(v) if v >= 0 => {
                        self.bump();
                        OperatorNode::new(OpKind::Checkout).with_param("version", Literal::Int(v))
                    }
                    _ => return Err(self.error("expected a version number", &["integer"])),
                }
            }
            _ => self.transform()?,
        };
        if !matches!(self.peek().tok, Tok::Eof) {
            return Err(self.error("expected end of command", &["end of input"]));
        }
        Ok(node)
    }

    fn load(&mut self) -> Result<OperatorNode, SpecError> {
        self.expect_word("load")?;
        let path = match &self.peek().tok {
            Tok::Str(s) => s.clone(),
            _ => return Err(self.error("expected a quoted path", &["string"])),
        };
        self.bump();
        self.expect_word("as")?;
        let name = self.ident("a dataset name")?;
        let mut node = OperatorNode::new(OpKind::Load)
            .with_param("path", Literal::Str(path))
            .with_param("name", Literal::Str(name));
        if self.is_word("text") {
            self.bump();
            self.expect_sym("(")?;
            let mut cols = vec![Literal::Str(self.name("a column name")?)];
            while self.is_sym(",") {
                self.bump();
                cols.push(Literal::Str(self.name("a column name")?));
            }
            self.expect_sym(")")?;
            node = node.with_param("text_columns", Literal::List(cols));
        }
        Ok(node)
    }

    fn transform(&mut self) -> Result<OperatorNode, SpecError> {
        let kind_pos = self.peek().pos;
        let kind = OpKind::from_keyword(&self.ident("an operator")?);
        if kind.is_actionless() {
            return Err(syntax(kind_pos, format!("`{kind}` cannot be used as a transformation"), &["operator name"]));
        }
        let mut node = OperatorNode::new(kind.clone());
        let target = if kind == OpKind::Synthesize {
            self.ident("an operator name")?
        } else {
            self.name("a column name")?
        };
        if kind == OpKind::Synthesize {
            node.name = Some(target);
        } else {
            node.column = Some(target);
        }
        node.action = Some(self.one_of("an action", &["add", "create", "update"], Action::parse)?);
        if kind.is_composite() {
            self.expect_sym("[")?;
            node.children.push(self.item()?);
            while self.is_sym(";") {
                self.bump();
                node.children.push(self.item()?);
            }
            self.expect_sym("]")?;
        } else if kind.is_unit_transform() {
            node.udf = Some(self.ident("a udf name")?);
        }
        if self.is_word("with") {
            self.bump();
            node.params = self.params()?;
        }
        Ok(node)
    }

    fn item(&mut self) -> Result<OperatorNode, SpecError> {
        let bare = matches!(self.peek().tok, Tok::Ident(_))
            && !matches!(self.peek_at(1), Tok::Ident(s) if s != "with");
        if !bare {
            return self.transform();
        }
        let name = self.ident("an operator")?;
        let mut node = match builtin_udf_kind(&name) {
            Some(kind) => OperatorNode::unit(kind, &name),
            None => OperatorNode::new(OpKind::Named(name)),
        };
        if self.is_word("with") {
            self.bump();
            node.params = self.params()?;
        }
        Ok(node)
    }

    fn params(&mut self) -> Result<BTreeMap<String, Literal>, SpecError> {
        let mut params = BTreeMap::new();
        loop {
            let pos = self.peek().pos;
            let key = self.ident("a parameter name")?;
            self.expect_sym("=")?;
            let value = self.literal()?;
            if params.insert(key.clone(), value).is_some() {
                return Err(syntax(pos, format!("duplicate parameter `{key}`"), &[]));
            }
            if !self.is_sym(",") {
                return Ok(params);
            }
            self.bump();
        }
    }

    fn literal(&mut self) -> Result<Literal, SpecError> {
        let lit = match &self.peek().tok {
            Tok::Str(s) => Literal::Str(s.clone()),
            Tok::Int(i) => Literal::Int(*i),
            Tok::Float(x) => Literal::Float(*x),
            Tok::Ident(s) if s == "true" => Literal::Bool(true),
            Tok::Ident(s) if s == "false" => Literal::Bool(false),
            Tok::Ident(s) => Literal::Str(s.clone()),
            Tok::Sym("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_sym("]") {
                    items.push(self.literal()?);
                    while self.is_sym(",") {
                        self.bump();
                        items.push(self.literal()?);
                    }
                }
                self.expect_sym("]")?;
                return Ok(Literal::List(items));
            }
            _ => return Err(self.error("expected a literal", &["string", "number", "true", "false", "identifier", "["])),
        };
        self.bump();
        Ok(lit)
    }

    fn select(&mut self) -> Result<OperatorNode, SpecError> {
        self.expect_word("select")?;
        let view = self.ident("a view id")?;
        let kind = self.one_of("a selection kind", &["single", "list", "interval"], SelectionKind::parse)?;
        self.expect_word("where")?;
        let pred_pos = self.peek().pos;
        let field = self.name("a field name")?;
        let op = match &self.peek().tok {
            Tok::Sym(s) => CmpOp::parse(s).filter(|op| !matches!(op, CmpOp::Contains | CmpOp::In)),
            Tok::Ident(s) => CmpOp::parse(s).filter(|op| matches!(op, CmpOp::Contains | CmpOp::In)),
            _ => None,
        };
        let Some(op) = op else {
            return Err(self.error("expected a comparison", &["==", "!=", "<", "<=", ">", ">=", "contains", "in"]));
        };
        self.bump();
        let value = self.literal()?;
        let mapping_tag = if self.is_word("as") {
            self.bump();
            Some(self.one_of("a mapping tag", &["single", "multi"], MappingTag::parse)?)
        } else {
            None
        };
        let selection = Selection { kind, predicate: Predicate { field, op, value }, mapping_tag };
        if let Err(SpecError::Schema { reason, .. }) = super::validate_selection(&selection, "$") {
            return Err(syntax(pred_pos, reason, &[]));
        }
        let mut node = OperatorNode::new(OpKind::Select);
        node.view = Some(view);
        node.selection = Some(selection);
        Ok(node)
    }

    fn coordinate(&mut self) -> Result<OperatorNode, SpecError> {
        self.expect_word("coordinate")?;
        let source = self.ident("a source view id")?;
        self.expect_sym("->")?;
        let target = self.ident("a target view id")?;
        self.expect_word("on")?;
        let field = self.name("a field name")?;
        let mut node = OperatorNode::new(OpKind::Coordinate)
            .with_param("target", Literal::Str(target))
            .with_param("on", Literal::Str(field));
        node.view = Some(source);
        if self.is_word("as") {
            self.bump();
            let tag = self.one_of("a mapping tag", &["single", "multi"], MappingTag::parse)?;
            node = node.with_param("type", Literal::Str(tag.as_str().to_string()));
        }
        Ok(node)
    }
}

/// Parses one command line into an [`OperatorNode`].
pub fn parse_command(line: &str) -> Result<OperatorNode, SpecError> {
    let tokens = lex(line)?;
    let node = Parser { tokens, at: 0 }.command()?;
    validate(&node, "$").map_err(|e| match e {
        SpecError::Schema { path, reason } => syntax(0, format!("{reason} (at {path})"), &[]),
        other => other,
    })?;
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_single_bar() {
        let n = parse_command(r#"select v1 single where token == "comfy""#).unwrap();
        assert_eq!(n.kind, OpKind::Select);
        assert_eq!(n.view.as_deref(), Some("v1"));
        let sel = n.selection.unwrap();
        assert_eq!(sel.kind, SelectionKind::Single);
        assert_eq!(sel.predicate, Predicate { field: "token".into(), op: CmpOp::Eq, value: Literal::Str("comfy".into()) });
    }

    #[test]
    fn project_command() {
        let n = parse_command("project Review update lowercase").unwrap();
        assert_eq!(n, OperatorNode::unit(OpKind::Project, "lowercase").on_column("Review").with_action(Action::Update));
    }

    #[test]
    fn combine_with_bare_udfs() {
        let n = parse_command("combine Review update [lowercase; remove_stopwords]").unwrap();
        assert_eq!(n.children.len(), 2);
        assert_eq!(n.children[1], OperatorNode::unit(OpKind::Project, "remove_stopwords"));
    }

    #[test]
    fn bare_items_with_params_and_named_items() {
        let n = parse_command("combine Review create [tokenize; lda with k=3, seed=7; clean]").unwrap();
        assert_eq!(n.children[1].params["k"], Literal::Int(3));
        assert_eq!(n.children[2].kind, OpKind::Named("clean".into()));
    }

    #[test]
    fn synthesize_and_invoke() {
        let n = parse_command("synthesize clean update [lowercase; remove_stopwords]").unwrap();
        assert_eq!(n.name.as_deref(), Some("clean"));
        assert_eq!(n.column, None);
        let call = parse_command("clean Review update").unwrap();
        assert_eq!(call.kind, OpKind::Named("clean".into()));
        assert!(parse_command("clean Review update lowercase").is_err());
    }

    #[test]
    fn coordinate_and_load() {
        let n = parse_command("coordinate v1 -> table on token as multi").unwrap();
        assert_eq!(n.param_str("target"), Some("table"));
        assert_eq!(n.param_str("type"), Some("multi"));
        let l = parse_command(r#"load "data/reviews.csv" as reviews text(Review, Title)"#).unwrap();
        assert_eq!(
            l.params["text_columns"],
            Literal::List(vec![Literal::Str("Review".into()), Literal::Str("Title".into())])
        );
    }

    #[test]
    fn interval_requires_ordered_pair() {
        assert!(parse_command("select v2 interval where x in [0.1, 0.5]").is_ok());
        let err = parse_command("select v2 interval where x in [0.5, 0.1]").unwrap_err();
        assert!(matches!(err, SpecError::Syntax { position: 25, .. }), "{err:?}");
    }

    #[test]
    fn errors_are_positioned() {
        let err = parse_command("project Review upsert lowercase").unwrap_err();
        match err {
            SpecError::Syntax { position, expected, .. } => {
                assert_eq!(position, 15);
                assert_eq!(expected, vec!["add", "create", "update"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_command(""), Err(SpecError::Syntax { position: 0, .. })));
        assert!(matches!(parse_command(r#"select v1 single where t == "x"#), Err(SpecError::Syntax { position: 28, .. })));
        assert!(matches!(parse_command("undo now"), Err(SpecError::Syntax { position: 5, .. })));
        assert!(matches!(parse_command("checkout -1"), Err(SpecError::Syntax { position: 9, .. })));
    }

    #[test]
    fn escapes_in_strings() {
        let n = parse_command(r#"select table list where Review contains "say \"hi\"""#).unwrap();
        assert_eq!(n.selection.unwrap().predicate.value, Literal::Str("say \"hi\"".into()));
    }
}
