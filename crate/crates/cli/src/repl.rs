//! Line-oriented driver shared by `vita repl` and `vita run`.
//!
//! Ordinary lines are operator commands. Lines starting with `:` are
//! inspection commands: `:table [offset] [limit]`, `:history`, `:viz`,
//! `:ops`, `:explain <command>` and `:help`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use vita_core::compiler::explain;
use vita_core::coord::EffectKind;
use vita_core::session::{ApplyResponse, Session, Source, TablePage};
use vita_core::spec::parse_command;
use vita_core::{VitaError, VitaFrame};

pub const HELP: &str = "\
commands:
  <operator command>        apply, e.g. project \"Review Text\" update lowercase
  :table [offset] [limit]   show the current table page
  :history                  list versions
  :viz                      list charts
  :ops                      list operators and their defaults
  :explain <command>        show the compiled plan without applying it
  :help                     this text
";

pub struct Repl {
    pub session: Session,
    emit_charts: Option<PathBuf>,
}

/// Outcome of one input line.
#[derive(Debug)]
pub enum LineResult {
    Skipped,
    Output(String),
    Failed(String),
}

pub fn format_error(e: &VitaError) -> String {
    format!("error[{}/{}]: {e}", e.stage(), e.kind())
}

impl Repl {
    pub fn new(frame: VitaFrame, session_dir: Option<&Path>, emit_charts: Option<PathBuf>) -> Result<Self, VitaError> {
        if let Some(dir) = &emit_charts {
            std::fs::create_dir_all(dir).map_err(|e| VitaError::Range(format!("{}: {e}", dir.display())))?;
        }
        Ok(Self { session: Session::create("repl", frame, session_dir)?, emit_charts })
    }

    pub fn line(&mut self, line: &str) -> LineResult {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return LineResult::Skipped;
        }
        let result = match line.strip_prefix(':') {
            Some(meta) => self.meta(meta),
            None => self.session.apply(Source::Command, line).and_then(|r| self.describe(&r)),
        };
        match result {
            Ok(text) => LineResult::Output(text),
            Err(e) => LineResult::Failed(format_error(&e)),
        }
    }

    fn meta(&mut self, meta: &str) -> Result<String, VitaError> {
        let (word, rest) = meta.split_once(char::is_whitespace).unwrap_or((meta, ""));
        let rest = rest.trim();
        match word {
            "table" => {
                let mut nums = rest.split_whitespace().map(|n| n.parse::<usize>());
                let bad = |_| VitaError::Range("expected `:table [offset] [limit]`".into());
                let offset = nums.next().transpose().map_err(bad)?.unwrap_or(0);
                let limit = nums.next().transpose().map_err(bad)?.unwrap_or(10);
                Ok(render_table(&self.session.table(offset, limit)?))
            }
            "history" => {
                let mut out = String::new();
                for n in self.session.history() {
                    let head = if n.version_id == self.session.head() { "*" } else { " " };
                    let parent = n.parent.map_or("-".to_string(), |p| format!("v{p}"));
                    let op = n.operator_record.as_ref().map_or("(root)".to_string(), |r| r.to_string());
                    let _ = writeln!(out, "{head} v{} <- {parent}  {op}", n.version_id);
                }
                Ok(out)
            }
            "viz" => Ok(self
                .session
                .state()
                .charts
                .iter()
                .map(|(id, c)| format!("{id}: {} of {} ({} marks)\n", c.mark.as_str(), c.source.column, c.marks.len()))
                .collect()),
            "ops" => Ok(self
                .session
                .state()
                .registry
                .describe()
                .iter()
                .map(|o| {
                    let params: Vec<String> = o.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!(
                        "{:<22} {:<10} {} -> {}  [{}] {}\n",
                        o.name,
                        o.family,
                        o.input,
                        o.output,
                        o.default_action.as_deref().unwrap_or("-"),
                        params.join(", ")
                    )
                })
                .collect()),
            "explain" => {
                let node = parse_command(rest)?;
                Ok(explain(&self.session.state().compile(&node)?))
            }
            "help" => Ok(HELP.to_string()),
            other => Err(VitaError::Range(format!("unknown command `:{other}`; try :help"))),
        }
    }

    fn describe(&self, r: &ApplyResponse) -> Result<String, VitaError> {
        let mut out = format!("v{}", r.version_id);
        let d = &r.table_delta;
        for (label, cols) in [("added", &d.added), ("updated", &d.updated), ("removed", &d.removed)] {
            if !cols.is_empty() {
                let _ = write!(out, "  {label}: {}", cols.join(", "));
            }
        }
        out.push('\n');
        for doc in &r.new_viz {
            let mark = doc.spec["mark"].as_str().unwrap_or("chart");
            let _ = write!(out, "  chart {} ({mark})", doc.view_id);
            if let Some(dir) = &self.emit_charts {
                let path = dir.join(format!("{}.vl.json", doc.view_id));
                let text = serde_json::to_string_pretty(&doc.spec).expect("charts serialize");
                std::fs::write(&path, text).map_err(|e| VitaError::Range(format!("{}: {e}", path.display())))?;
                let _ = write!(out, " -> {}", path.display());
            }
            out.push('\n');
        }
        for e in &r.effects {
            let kind = match e.effect {
                EffectKind::Filter => "filter",
                EffectKind::Highlight => "highlight",
                EffectKind::Reset => "reset",
            };
            let _ = write!(out, "  {kind} {}", e.view);
            if e.effect != EffectKind::Reset {
                let _ = write!(out, " rows={:?}", e.row_ids);
                if !e.marks.is_empty() {
                    let _ = write!(out, " marks={:?}", e.marks);
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Reads commands until EOF. With `stop_on_error` the first failure ends
    /// the run and is returned.
    pub fn drive(&mut self, input: impl BufRead, mut out: impl Write, prompt: bool, stop_on_error: bool) -> io::Result<Result<(), String>> {
        if prompt {
            write!(out, "vita> ")?;
            out.flush()?;
        }
        for (n, line) in input.lines().enumerate() {
            match self.line(&line?) {
                LineResult::Skipped => {}
                LineResult::Output(text) => write!(out, "{text}")?,
                LineResult::Failed(msg) if stop_on_error => {
                    return Ok(Err(format!("line {}: {msg}", n + 1)));
                }
                LineResult::Failed(msg) => writeln!(out, "{msg}")?,
            }
            if prompt {
                write!(out, "vita> ")?;
                out.flush()?;
            }
        }
        Ok(Ok(()))
    }
}

fn cell(v: &serde_json::Value) -> String {
    let s = match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    };
    if s.chars().count() > 32 {
        s.chars().take(31).collect::<String>() + "…"
    } else {
        s
    }
}

pub fn render_table(page: &TablePage) -> String {
    let mut out = String::from("row_id");
    for c in &page.columns {
        let _ = write!(out, "\t{}", c.name);
    }
    out.push('\n');
    for row in &page.rows {
        let _ = write!(out, "{}", row.row_id);
        for v in &row.values {
            let _ = write!(out, "\t{}", cell(v));
        }
        out.push('\n');
    }
    let _ = writeln!(out, "({} of {} rows from offset {}, version v{})", page.rows.len(), page.total, page.offset, page.version_id);
    out
}
