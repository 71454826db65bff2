//! Multi-view coordination: a directed link graph between views and the
//! propagation of one active selection across it.
//!
//! Every view exposes a binding from mark keys to frame row ids (the table's
//! marks are its rows). A selection resolves to rows in its origin view; rows
//! flow along links, and each reached view selects the marks whose rows
//! intersect what arrived, then forwards the rows of those marks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, EngineError};
use crate::frame::{RowId, VitaFrame};
use crate::ops::{self, predicate};
use crate::spec::{MappingTag, Selection, SelectionKind};
use crate::viz::VizSpec;

/// Id of the always-present table view.
pub const TABLE_VIEW: &str = "table";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggeredOp {
    Filter,
    Highlight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinationLink {
    pub source: String,
    pub target: String,
    /// Source field the link is declared on.
    pub on: String,
    pub source_tag: MappingTag,
    pub target_tag: MappingTag,
    pub triggered: TriggeredOp,
    /// Reverse half of a bidirectional pair: highlight only, never forwarded.
    pub back_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSelection {
    pub origin: String,
    pub selection: SelectionRecord,
    pub rows: Vec<RowId>,
    /// Views that received an effect.
    pub affected: Vec<String>,
}

/// Serializable form of a [`Selection`] (canonical operator JSON).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub kind: String,
    pub field: String,
    pub op: String,
    pub value: String,
}

impl SelectionRecord {
    fn of(sel: &Selection) -> Self {
        Self {
            kind: sel.kind.as_str().to_string(),
            field: sel.predicate.field.clone(),
            op: sel.predicate.op.as_str().to_string(),
            value: crate::spec::literal_to_json(&sel.predicate.value).to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectKind {
    Filter,
    Highlight,
    Reset,
}

/// Wire message sent to UI subscribers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub view: String,
    pub effect: EffectKind,
    pub row_ids: Vec<RowId>,
    pub marks: Vec<String>,
}

/// Read-only view of the table and chart catalog a propagation runs against.
#[derive(Clone, Copy)]
pub struct ViewCatalog<'a> {
    pub frame: &'a VitaFrame,
    pub charts: &'a BTreeMap<String, VizSpec>,
}

impl<'a> ViewCatalog<'a> {
    pub fn new(frame: &'a VitaFrame, charts: &'a BTreeMap<String, VizSpec>) -> Self {
        Self { frame, charts }
    }

    pub fn contains(&self, view: &str) -> bool {
        view == TABLE_VIEW || self.charts.contains_key(view)
    }

    fn require(&self, view: &str) -> Result<(), CoordError> {
        if self.contains(view) {
            Ok(())
        } else {
            Err(CoordError::UnknownView(view.to_string()))
        }
    }

    pub fn has_field(&self, view: &str, field: &str) -> bool {
        if view == TABLE_VIEW {
            field == "row_id" || self.frame.column(field).is_some()
        } else {
            self.charts.get(view).is_some_and(|c| c.field_index(field).is_some())
        }
    }

    /// Mark key to rows for `view`.
    pub fn binding(&self, view: &str) -> BTreeMap<String, Vec<RowId>> {
        if view == TABLE_VIEW {
            self.frame.row_ids().iter().map(|id| (id.to_string(), vec![*id])).collect()
        } else {
            self.charts.get(view).map(|c| c.marks.clone()).unwrap_or_default()
        }
    }

    /// Marks and rows a selection picks in `view`.
    pub fn resolve(&self, view: &str, sel: &Selection) -> Result<(Vec<String>, Vec<RowId>), CoordError> {
        self.require(view)?;
        let pred_err = |e: EngineError| CoordError::PredicateError(e.to_string());
        let (marks, rows): (Vec<String>, Vec<RowId>) = if view == TABLE_VIEW {
            let rows = ops::filter(self.frame, &sel.predicate, sel.kind).map_err(pred_err)?;
            (rows.iter().map(RowId::to_string).collect(), rows)
        } else {
            let chart = &self.charts[view];
            let idx = chart
                .field_index(&sel.predicate.field)
                .ok_or_else(|| pred_err(EngineError::UnknownField(sel.predicate.field.clone())))?;
            predicate::check(&chart.fields[idx].dtype, &sel.predicate, sel.kind).map_err(pred_err)?;
            let marks: BTreeSet<String> = chart
                .rows
                .iter()
                .filter(|r| predicate::matches(&r[idx], &sel.predicate, sel.kind))
                .map(|r| chart.mark_key(r))
                .collect();
            let rows: BTreeSet<RowId> =
                marks.iter().flat_map(|m| chart.marks.get(m).into_iter().flatten().copied()).collect();
            (marks.into_iter().collect(), rows.into_iter().collect())
        };
        if sel.kind == SelectionKind::Single && marks.len() > 1 {
            return Err(CoordError::PredicateError(format!(
                "single selection matched {} marks in `{view}`",
                marks.len()
            )));
        }
        Ok((marks, rows))
    }
}

/// Requested link, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRequest {
    pub source: String,
    pub target: String,
    pub on: String,
    pub source_tag: MappingTag,
    pub target_tag: MappingTag,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordinationGraph {
    pub links: Vec<CoordinationLink>,
    pub active: Option<ActiveSelection>,
}

impl CoordinationGraph {
    fn forward_links(&self) -> impl Iterator<Item = &CoordinationLink> {
        self.links.iter().filter(|l| !l.back_edge)
    }

    fn reaches(&self, from: &str, to: &str) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if seen.insert(v) {
                stack.extend(self.forward_links().filter(|l| l.source == v).map(|l| l.target.as_str()));
            }
        }
        false
    }

    /// Adds a link. A link closing a cycle is rejected unless it is the
    /// direct reverse of an existing link, which makes it a highlight-only
    /// back edge.
    pub fn coordinate(&self, catalog: &ViewCatalog<'_>, req: LinkRequest) -> Result<Self, CoordError> {
        catalog.require(&req.source)?;
        catalog.require(&req.target)?;
        if req.source == req.target || self.links.iter().any(|l| l.source == req.source && l.target == req.target) {
            return Err(CoordError::DuplicateLink(req.source, req.target));
        }
        if !catalog.has_field(&req.source, &req.on) {
            return Err(CoordError::IncompatibleMapping(format!("view `{}` has no field `{}`", req.source, req.on)));
        }
        if req.target_tag == MappingTag::Single {
            let one_to_one = catalog.binding(&req.target).values().all(|rows| rows.len() == 1);
            if !one_to_one {
                return Err(CoordError::IncompatibleMapping(format!(
                    "target `{}` marks stand for several rows; tag it multi",
                    req.target
                )));
            }
        }
        let mut back_edge = false;
        if self.reaches(&req.target, &req.source) {
            let reverse_exists = self
                .forward_links()
                .any(|l| l.source == req.target && l.target == req.source);
            if !reverse_exists {
                return Err(CoordError::CycleError(req.source, req.target));
            }
            back_edge = true;
        }
        let triggered = if req.target == TABLE_VIEW && !back_edge { TriggeredOp::Filter } else { TriggeredOp::Highlight };
        let mut next = self.clone();
        next.links.push(CoordinationLink {
            source: req.source,
            target: req.target,
            on: req.on,
            source_tag: req.source_tag,
            target_tag: req.target_tag,
            triggered,
            back_edge,
        });
        Ok(next)
    }

    /// Views reachable from `origin` over forward links, in topological order
    /// (ties broken by view id).
    fn topo_from(&self, origin: &str) -> Vec<String> {
        let mut reach = BTreeSet::new();
        let mut stack = vec![origin.to_string()];
        while let Some(v) = stack.pop() {
            if reach.insert(v.clone()) {
                stack.extend(self.forward_links().filter(|l| l.source == v).map(|l| l.target.clone()));
            }
        }
        let edges: Vec<&CoordinationLink> =
            self.forward_links().filter(|l| reach.contains(&l.source)).collect();
        let mut indegree: BTreeMap<&str, usize> = reach.iter().map(|v| (v.as_str(), 0)).collect();
        for l in &edges {
            *indegree.get_mut(l.target.as_str()).expect("target reachable") += 1;
        }
        let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        let mut order = Vec::new();
        while let Some(v) = ready.pop_first() {
            order.push(v.to_string());
            for l in edges.iter().filter(|l| l.source == v) {
                let d = indegree.get_mut(l.target.as_str()).expect("target reachable");
                *d -= 1;
                if *d == 0 {
                    ready.insert(l.target.as_str());
                }
            }
        }
        order
    }

    /// Resolves `sel` on `origin`, pushes rows along every reachable link and
    /// returns one effect per affected view. Supersedes any prior selection.
    pub fn propagate(
        &mut self,
        catalog: &ViewCatalog<'_>,
        origin: &str,
        sel: &Selection,
    ) -> Result<Vec<Effect>, CoordError> {
        let (marks, rows) = catalog.resolve(origin, sel)?;
        let mut effects = vec![if origin == TABLE_VIEW {
            Effect { view: origin.to_string(), effect: EffectKind::Filter, row_ids: rows.clone(), marks: Vec::new() }
        } else {
            Effect { view: origin.to_string(), effect: EffectKind::Highlight, row_ids: rows.clone(), marks }
        }];

        let mut incoming: BTreeMap<String, (BTreeSet<RowId>, TriggeredOp)> = BTreeMap::new();
        let mut forwarded: BTreeMap<String, BTreeSet<RowId>> = BTreeMap::new();
        forwarded.insert(origin.to_string(), rows.iter().copied().collect());
        for view in self.topo_from(origin) {
            if view != origin {
                let (arrived, op) = incoming.remove(&view).unwrap_or((BTreeSet::new(), TriggeredOp::Highlight));
                let effect = self.effect_for(catalog, &view, &arrived, op);
                forwarded.insert(view.clone(), effect.row_ids.iter().copied().collect());
                effects.push(effect);
            }
            let out = forwarded[&view].clone();
            for l in self.forward_links().filter(|l| l.source == view && l.target != origin) {
                let entry = incoming.entry(l.target.clone()).or_insert((BTreeSet::new(), l.triggered));
                entry.0.extend(out.iter().copied());
                if l.triggered == TriggeredOp::Filter {
                    entry.1 = TriggeredOp::Filter;
                }
            }
        }
        let rows_set: BTreeSet<RowId> = rows.iter().copied().collect();
        for l in self.links.iter().filter(|l| l.back_edge && l.source == origin) {
            if effects.iter().all(|e| e.view != l.target) {
                effects.push(self.effect_for(catalog, &l.target, &rows_set, TriggeredOp::Highlight));
            }
        }

        self.active = Some(ActiveSelection {
            origin: origin.to_string(),
            selection: SelectionRecord::of(sel),
            rows,
            affected: effects.iter().map(|e| e.view.clone()).collect(),
        });
        Ok(effects)
    }

    fn effect_for(&self, catalog: &ViewCatalog<'_>, view: &str, arrived: &BTreeSet<RowId>, op: TriggeredOp) -> Effect {
        let binding = catalog.binding(view);
        let hit: Vec<(&String, &Vec<RowId>)> =
            binding.iter().filter(|(_, rows)| rows.iter().any(|r| arrived.contains(r))).collect();
        let row_ids: BTreeSet<RowId> = hit.iter().flat_map(|(_, rows)| rows.iter().copied()).collect();
        let effect = match op {
            TriggeredOp::Filter => EffectKind::Filter,
            TriggeredOp::Highlight => EffectKind::Highlight,
        };
        let marks = if view == TABLE_VIEW { Vec::new() } else { hit.iter().map(|(m, _)| (*m).clone()).collect() };
        let mut row_ids: Vec<RowId> = row_ids.into_iter().collect();
        if view == TABLE_VIEW {
            // keep frame order for the table
            let order: BTreeMap<RowId, usize> =
                catalog.frame.row_ids().iter().enumerate().map(|(i, id)| (*id, i)).collect();
            row_ids.sort_by_key(|id| order.get(id).copied().unwrap_or(usize::MAX));
        }
        Effect { view: view.to_string(), effect, row_ids, marks }
    }

    /// Drops the active selection if it originates at `view` (or any, when
    /// `None`) and resets every view it touched.
    pub fn clear(&mut self, catalog: &ViewCatalog<'_>, view: Option<&str>) -> Result<Vec<Effect>, CoordError> {
        if let Some(v) = view {
            catalog.require(v)?;
        }
        let matches = match (&self.active, view) {
            (Some(a), Some(v)) => a.origin == v,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if !matches {
            return Ok(Vec::new());
        }
        let active = self.active.take().expect("checked above");
        Ok(active
            .affected
            .into_iter()
            .map(|v| Effect { view: v, effect: EffectKind::Reset, row_ids: Vec::new(), marks: Vec::new() })
            .collect())
    }

    /// Row ids the table currently shows, if a selection filters it.
    pub fn table_filter(&self, catalog: &ViewCatalog<'_>) -> Option<Vec<RowId>> {
        let active = self.active.as_ref()?;
        if active.origin == TABLE_VIEW {
            return Some(active.rows.clone());
        }
        None.or_else(|| {
            let sel = self.active_selection()?;
            let mut scratch = self.clone();
            let effects = scratch.propagate(catalog, &active.origin, &sel).ok()?;
            effects
                .into_iter()
                .find(|e| e.view == TABLE_VIEW && e.effect == EffectKind::Filter)
                .map(|e| e.row_ids)
        })
    }

    /// Reconstructs the active [`Selection`].
    pub fn active_selection(&self) -> Option<Selection> {
        let rec = &self.active.as_ref()?.selection;
        let value: serde_json::Value = serde_json::from_str(&rec.value).ok()?;
        let node = serde_json::json!({
            "operator": "select",
            "view": "_",
            "selection": {"kind": rec.kind, "field": rec.field, "op": rec.op, "value": value},
        });
        crate::spec::parse_json(node.to_string().as_bytes()).ok()?.selection
    }
}
