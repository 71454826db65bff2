//! Live analysis state and plan execution.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compiler::{self, Binding, OperatorRegistry, Plan, PlanStep, ViewSchemas};
use crate::coord::{CoordinationGraph, Effect, LinkRequest, ViewCatalog};
use crate::digest::{digest_of, Digest};
use crate::error::{CompileError, EngineError};
use crate::frame::VitaFrame;
use crate::load::{load_csv_path, LoadOptions};
use crate::ops::{self, LdaParams, Norm, TfidfParams};
use crate::spec::{Action, Literal, MappingTag, OpKind, OperatorNode};
use crate::types::{DomainType, Value};
use crate::viz::{self, VizSpec};

/// Frame, chart catalog, link graph and operator registry of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub frame: VitaFrame,
    pub charts: BTreeMap<String, VizSpec>,
    pub coord: CoordinationGraph,
    pub registry: OperatorRegistry,
}

/// Content digests of the four state components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDigests {
    pub frame: Digest,
    pub viz: Digest,
    pub coordination: Digest,
    pub registry: Digest,
}

/// Result of executing one plan.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub state: SessionState,
    pub effects: Vec<Effect>,
    /// Ids of charts created by the plan, in creation order.
    pub new_viz: Vec<String>,
}

impl SessionState {
    pub fn new(frame: VitaFrame) -> Self {
        Self { frame, charts: BTreeMap::new(), coord: CoordinationGraph::default(), registry: OperatorRegistry::new() }
    }

    pub fn view_schemas(&self) -> ViewSchemas {
        self.charts.iter().map(|(id, c)| (id.clone(), c.fields.clone())).collect()
    }

    pub fn catalog(&self) -> ViewCatalog<'_> {
        ViewCatalog::new(&self.frame, &self.charts)
    }

    pub fn digests(&self) -> StateDigests {
        StateDigests {
            frame: self.frame.snapshot_hash(),
            viz: digest_of(&self.charts),
            coordination: digest_of(&self.coord),
            registry: digest_of(&self.registry),
        }
    }

    pub fn compile(&self, node: &OperatorNode) -> Result<Plan, CompileError> {
        compiler::compile(node, &self.frame.schema(), &self.view_schemas(), &self.registry)
    }

    /// Row ids the table shows under the active selection, in frame order.
    pub fn visible_rows(&self) -> Vec<u64> {
        match self.coord.table_filter(&self.catalog()) {
            Some(rows) => {
                let keep: std::collections::BTreeSet<u64> = rows.into_iter().collect();
                self.frame.row_ids().iter().copied().filter(|id| keep.contains(id)).collect()
            }
            None => self.frame.row_ids().to_vec(),
        }
    }

    /// Runs every step of `plan` against a copy of this state. Session-level
    /// steps (`undo`, `checkout`) are not executable here.
    pub fn execute(&self, plan: &Plan) -> Result<Outcome, EngineError> {
        let mut out = Outcome { state: self.clone(), effects: Vec::new(), new_viz: Vec::new() };
        for step in &plan.steps {
            out.state.apply_step(step, &mut out.effects, &mut out.new_viz)?;
        }
        if let Some(reg) = &plan.registration {
            out.state.registry = compiler::register_synthesized(&out.state.registry, &reg.name, &reg.template)
                .map_err(|e| EngineError::UnknownOp(e.to_string()))?;
        }
        Ok(out)
    }

    fn apply_step(&mut self, step: &PlanStep, effects: &mut Vec<Effect>, new_viz: &mut Vec<String>) -> Result<(), EngineError> {
        let udf = step.udf.as_deref().unwrap_or_default();
        match step.kind {
            OpKind::Project | OpKind::Mutate => {
                let col = self.frame.try_column(&step.inputs[0])?;
                let mut meta: Vec<(&str, DomainType, Value)> = Vec::new();
                let (dtype, values) = match udf {
                    "lowercase" | "remove_stopwords" | "strip_punct" => (DomainType::Text, ops::project_text(col, udf)?),
                    "tokenize" => (DomainType::tokens(), ops::tokenize(col)?),
                    "pca2" => (DomainType::vector(DomainType::Float), ops::pca2_column(col)?),
                    "tfidf" => {
                        let params = TfidfParams {
                            min_df: step.param_i64("min_df").unwrap_or(1) as usize,
                            norm: step.param_str("norm").and_then(Norm::parse).unwrap_or(Norm::L2),
                        };
                        let (values, model) = ops::tfidf_column(col, params)?;
                        meta.push((compiler::VOCABULARY_META, DomainType::tokens(), ops::text::tokens_value(model.vocabulary)));
                        meta.push((compiler::IDF_META, DomainType::vector(DomainType::Float), Value::Vector(model.idf)));
                        (DomainType::vector(DomainType::Float), values)
                    }
                    "lda" => {
                        let params = LdaParams {
                            k: step.param_i64("k").unwrap_or(compiler::DEFAULT_LDA_K) as usize,
                            iterations: step.param_i64("iterations").unwrap_or(ops::lda::DEFAULT_ITERATIONS as i64) as usize,
                            seed: step.param_i64("seed").unwrap_or(compiler::DEFAULT_LDA_SEED) as u64,
                            alpha: step.param_f64("alpha"),
                            beta: step.param_f64("beta").unwrap_or(ops::lda::DEFAULT_BETA),
                        };
                        (DomainType::vector(DomainType::Float), ops::lda_column(col, &params)?.0)
                    }
                    "cluster_assign" => {
                        let clusters = col.vector_dim().unwrap_or(0) as i64;
                        meta.push((compiler::CLUSTERS_META, DomainType::Int, Value::Int(clusters)));
                        (DomainType::Int, ops::cluster_assign(col)?)
                    }
                    other => return Err(EngineError::UnknownOp(other.to_string())),
                };
                let Binding::Column(target) = &step.output else {
                    return Err(EngineError::MissingBinding(format!("step {} has no output column", step.op_name())));
                };
                let mut frame = if step.action == Some(Action::Update) {
                    self.frame.update_column(target, values, Some(dtype))?
                } else {
                    self.frame.add_column(target, dtype, values)?
                };
                for (key, dtype, value) in meta {
                    frame = frame.set_metadata(target, key, dtype, value)?;
                }
                self.frame = frame;
            }
            OpKind::Aggregate | OpKind::SetOp => {
                let col = self.frame.try_column(&step.inputs[0])?;
                let (dtype, value) = if udf == "unique_tokens" {
                    (DomainType::tokens(), ops::unique_tokens(col)?)
                } else {
                    ops::aggregate(col, udf)?
                };
                let key = step.param_str("key").unwrap_or(udf);
                self.frame = self.frame.set_metadata(&step.inputs[0], key, dtype, value)?;
            }
            OpKind::Visualize => {
                let params = step
                    .chart_params()
                    .ok_or_else(|| EngineError::UnknownOp(step.op_name()))?;
                let view = step.param_str("view").unwrap_or_default().to_string();
                let spec = viz::visualize(&self.frame, &view, &params)?;
                self.charts.insert(view.clone(), spec);
                new_viz.push(view);
            }
            OpKind::Select => {
                let sel = step.selection.as_ref().ok_or_else(|| EngineError::UnknownOp("select".into()))?;
                let catalog = ViewCatalog::new(&self.frame, &self.charts);
                effects.extend(self.coord.propagate(&catalog, &step.inputs[0], sel)?);
            }
            OpKind::Clear => {
                let catalog = ViewCatalog::new(&self.frame, &self.charts);
                effects.extend(self.coord.clear(&catalog, step.inputs.first().map(String::as_str))?);
            }
            OpKind::Coordinate => {
                let tag = |key: &str, default| step.param_str(key).and_then(MappingTag::parse).unwrap_or(default);
                let req = LinkRequest {
                    source: step.inputs[0].clone(),
                    target: step.param_str("target").unwrap_or_default().to_string(),
                    on: step.param_str("on").unwrap_or_default().to_string(),
                    source_tag: tag("source_type", MappingTag::Single),
                    target_tag: tag("type", MappingTag::Multi),
                };
                self.coord = self.coord.coordinate(&self.catalog(), req)?;
            }
            OpKind::Load => {
                let path = step.param_str("path").unwrap_or_default();
                let text_columns: Vec<String> = match step.params.get("text_columns") {
                    Some(Literal::List(items)) => items.iter().filter_map(|i| i.as_str().map(str::to_string)).collect(),
                    _ => Vec::new(),
                };
                let frame = load_csv_path(Path::new(path), &LoadOptions::default().with_text_columns(text_columns))?;
                let registry = std::mem::take(&mut self.registry);
                *self = SessionState { registry, ..SessionState::new(frame) };
            }
            _ => return Err(EngineError::UnknownOp(step.op_name())),
        }
        Ok(())
    }
}
