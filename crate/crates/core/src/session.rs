//! Sessions: parse, compile, execute and commit operators against one live
//! state, and fan effect messages out to subscribers.
//!
//! This layer is transport-agnostic; the HTTP/WebSocket server and the REPL
//! both drive [`Session`] through a [`SessionManager`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use serde::Serialize;
use serde_json::Value as J;

use crate::coord::{Effect, EffectKind};
use crate::error::VitaError;
use crate::frame::{RowId, VitaFrame};
use crate::load::{load_csv_bytes, load_csv_path, LoadOptions};
use crate::spec::{self, Literal, OpKind, OperatorNode};
use crate::state::SessionState;
use crate::version::{VersionId, VersionNode, VersionStore};
use crate::viz;

/// Rows included in the table page of an apply response.
pub const DELTA_PAGE_ROWS: usize = 50;
/// Largest page a table request may ask for.
pub const MAX_PAGE_ROWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Json,
    Command,
}

impl Source {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Source::Json),
            "command" => Some(Source::Command),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnInfo {
    pub name: String,
    pub dtype: String,
    pub metadata: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub row_id: RowId,
    pub values: Vec<J>,
}

/// A page of the table under the active filter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TablePage {
    pub version_id: VersionId,
    pub offset: usize,
    pub limit: usize,
    /// Visible rows in total.
    pub total: usize,
    pub columns: Vec<ColumnInfo>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableDelta {
    pub added: Vec<String>,
    pub updated: Vec<String>,
    pub removed: Vec<String>,
    pub row_count: usize,
    pub page: TablePage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VizDoc {
    pub view_id: String,
    /// Vega-Lite v5 document.
    pub spec: J,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplyResponse {
    pub version_id: VersionId,
    pub effects: Vec<Effect>,
    pub table_delta: TableDelta,
    pub new_viz: Vec<VizDoc>,
}

type Subscriber = Box<dyn FnMut(&Effect) -> bool + Send>;

pub struct Session {
    id: String,
    state: SessionState,
    store: VersionStore,
    subscribers: Vec<Subscriber>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("id", &self.id).field("head", &self.store.head()).finish_non_exhaustive()
    }
}

impl Session {
    /// New session over `frame`; persisted under `dir` when given.
    pub fn create(id: &str, frame: VitaFrame, dir: Option<&Path>) -> Result<Self, VitaError> {
        let state = SessionState::new(frame);
        let store = match dir {
            Some(d) => VersionStore::create(d, &state)?,
            None => VersionStore::in_memory(&state)?,
        };
        Ok(Self { id: id.to_string(), state, store, subscribers: Vec::new() })
    }

    /// Reopens a persisted session at its recorded head.
    pub fn open(id: &str, dir: &Path) -> Result<Self, VitaError> {
        let store = VersionStore::open(dir)?;
        let state = store.restore(store.head())?;
        Ok(Self { id: id.to_string(), state, store, subscribers: Vec::new() })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn store(&self) -> &VersionStore {
        &self.store
    }

    pub fn head(&self) -> VersionId {
        self.store.head()
    }

    /// Calls `f` with every effect in commit order until it returns `false`.
    pub fn subscribe_with(&mut self, f: impl FnMut(&Effect) -> bool + Send + 'static) {
        self.subscribers.push(Box::new(f));
    }

    pub fn subscribe(&mut self) -> mpsc::Receiver<Effect> {
        let (tx, rx) = mpsc::channel();
        self.subscribe_with(move |e| tx.send(e.clone()).is_ok());
        rx
    }

    fn broadcast(&mut self, effects: &[Effect]) {
        for e in effects {
            self.subscribers.retain_mut(|s| s(e));
        }
    }

    pub fn apply(&mut self, source: Source, payload: &str) -> Result<ApplyResponse, VitaError> {
        let node = match source {
            Source::Json => spec::parse_json(payload.as_bytes())?,
            Source::Command => spec::parse_command(payload)?,
        };
        self.apply_node(&node)
    }

    /// Runs one operator. `undo` and `checkout` move the head; everything else
    /// commits exactly one version. On error the session is unchanged.
    pub fn apply_node(&mut self, node: &OperatorNode) -> Result<ApplyResponse, VitaError> {
        match node.kind {
            OpKind::Undo => {
                let parent = self
                    .store
                    .head_node()
                    .parent
                    .ok_or_else(|| VitaError::Range("nothing to undo at the root version".into()))?;
                return self.move_to(parent);
            }
            OpKind::Checkout => {
                let version = match node.params.get("version") {
                    Some(Literal::Int(v)) if *v >= 0 => *v as u64,
                    _ => return Err(VitaError::Range("checkout needs a version id".into())),
                };
                return self.move_to(version);
            }
            _ => {}
        }
        let plan = self.state.compile(node)?;
        let outcome = self.state.execute(&plan)?;
        let version_id = self.store.commit(&outcome.state, Some(node))?.version_id;
        let previous = std::mem::replace(&mut self.state, outcome.state);
        let new_viz = outcome.new_viz.iter().filter_map(|id| self.viz_doc(id)).collect();
        let response = ApplyResponse {
            version_id,
            table_delta: self.delta(&previous),
            effects: outcome.effects,
            new_viz,
        };
        self.broadcast(&response.effects);
        Ok(response)
    }

    /// Moves the head to `version` and restores its state.
    pub fn checkout(&mut self, version: VersionId) -> Result<ApplyResponse, VitaError> {
        self.move_to(version)
    }

    fn move_to(&mut self, version: VersionId) -> Result<ApplyResponse, VitaError> {
        let restored = self.store.checkout(version)?;
        let previous = std::mem::replace(&mut self.state, restored);
        let mut effects: Vec<Effect> = previous
            .coord
            .active
            .iter()
            .flat_map(|a| a.affected.iter())
            .map(|v| Effect { view: v.clone(), effect: EffectKind::Reset, row_ids: Vec::new(), marks: Vec::new() })
            .collect();
        if let (Some(active), Some(sel)) = (&self.state.coord.active, self.state.coord.active_selection()) {
            let mut scratch = self.state.coord.clone();
            if let Ok(replayed) = scratch.propagate(&self.state.catalog(), &active.origin, &sel) {
                effects.extend(replayed);
            }
        }
        let new_viz = self
            .state
            .charts
            .iter()
            .filter(|(id, spec)| previous.charts.get(*id) != Some(spec))
            .filter_map(|(id, _)| self.viz_doc(id))
            .collect();
        let response = ApplyResponse { version_id: version, table_delta: self.delta(&previous), effects, new_viz };
        self.broadcast(&response.effects);
        Ok(response)
    }

    fn delta(&self, previous: &SessionState) -> TableDelta {
        let (old, new) = (&previous.frame, &self.state.frame);
        let added = new.columns().iter().filter(|c| old.column(&c.name).is_none()).map(|c| c.name.clone()).collect();
        let removed = old.columns().iter().filter(|c| new.column(&c.name).is_none()).map(|c| c.name.clone()).collect();
        let updated = new
            .columns()
            .iter()
            .filter(|c| old.column(&c.name).is_some_and(|o| o != *c))
            .map(|c| c.name.clone())
            .collect();
        let page = self.table(0, DELTA_PAGE_ROWS).expect("delta page is within bounds");
        TableDelta { added, updated, removed, row_count: page.total, page }
    }

    fn viz_doc(&self, view_id: &str) -> Option<VizDoc> {
        self.state
            .charts
            .get(view_id)
            .map(|spec| VizDoc { view_id: view_id.to_string(), spec: viz::vegalite_json(spec) })
    }

    /// Rows `offset..offset+limit` of the filtered table.
    pub fn table(&self, offset: usize, limit: usize) -> Result<TablePage, VitaError> {
        if limit > MAX_PAGE_ROWS {
            return Err(VitaError::Range(format!("limit {limit} exceeds {MAX_PAGE_ROWS}")));
        }
        let frame = &self.state.frame;
        let visible = self.state.visible_rows();
        let columns = frame
            .columns()
            .iter()
            .map(|c| ColumnInfo { name: c.name.clone(), dtype: c.dtype.to_string(), metadata: c.metadata.keys().cloned().collect() })
            .collect();
        let rows = visible
            .iter()
            .skip(offset)
            .take(limit)
            .map(|id| {
                let i = frame.index_of(*id).expect("visible rows come from the frame");
                TableRow { row_id: *id, values: frame.columns().iter().map(|c| c.values[i].to_display_json()).collect() }
            })
            .collect();
        Ok(TablePage { version_id: self.store.head(), offset, limit, total: visible.len(), columns, rows })
    }

    /// Every chart as a Vega-Lite document, ordered by view id.
    pub fn visualizations(&self) -> Vec<VizDoc> {
        self.state.charts.keys().filter_map(|id| self.viz_doc(id)).collect()
    }

    pub fn history(&self) -> &[VersionNode] {
        self.store.history()
    }
}

/// Registry of live sessions. Each session sits behind its own lock, so
/// mutations of one session are serialized while sessions run in parallel.
#[derive(Debug, Default)]
pub struct SessionManager {
    root: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionManager {
    /// Sessions persist under `root/<session id>` when `root` is given.
    pub fn new(root: Option<PathBuf>) -> Self {
        Self { root, sessions: RwLock::default(), next_id: AtomicU64::new(1) }
    }

    fn insert(&self, frame: VitaFrame) -> Result<String, VitaError> {
        let id = loop {
            let candidate = format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst));
            let taken = self.root.as_ref().is_some_and(|r| r.join(&candidate).exists());
            if !taken {
                break candidate;
            }
        };
        let dir = self.root.as_ref().map(|r| r.join(&id));
        let session = Session::create(&id, frame, dir.as_deref())?;
        self.sessions.write().expect("session map lock").insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn create_from_path(&self, path: &Path, opts: &LoadOptions) -> Result<String, VitaError> {
        self.insert(load_csv_path(path, opts)?)
    }

    pub fn create_from_bytes(&self, bytes: &[u8], opts: &LoadOptions) -> Result<String, VitaError> {
        self.insert(load_csv_bytes(bytes, opts)?)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, VitaError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| VitaError::UnknownSession(id.to_string()))
    }

    /// Locks session `id` for the duration of `f`.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, VitaError> {
        let session = self.get(id)?;
        let mut guard: MutexGuard<'_, Session> = session.lock().unwrap_or_else(|p| p.into_inner());
        Ok(f(&mut guard))
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().expect("session map lock").keys().cloned().collect()
    }
}
