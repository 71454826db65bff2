//! Per-operation checkpoints: a content-addressed blob store plus a rooted
//! version tree.
//!
//! On disk a session directory holds `store/<hex digest>` blobs, one per
//! distinct state component, `graph.jsonl` with one [`VersionNode`] per line
//! and a `HEAD` file naming the current version.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compiler::OperatorRegistry;
use crate::coord::CoordinationGraph;
use crate::digest::{canonical_json, Digest};
use crate::error::{VersionError, VitaError};
use crate::frame::VitaFrame;
use crate::spec::{self, OperatorNode};
use crate::state::{SessionState, StateDigests};
use crate::viz::VizSpec;

pub type VersionId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionNode {
    pub version_id: VersionId,
    pub parent: Option<VersionId>,
    /// Canonical JSON of the operator that produced this version; `None` at the root.
    pub operator_record: Option<serde_json::Value>,
    pub snapshot: StateDigests,
    pub created_at: String,
}

impl VersionNode {
    pub fn operator(&self) -> Option<OperatorNode> {
        let record = self.operator_record.as_ref()?;
        spec::parse_json(record.to_string().as_bytes()).ok()
    }
}

fn storage(e: impl std::fmt::Display) -> VersionError {
    VersionError::Storage(e.to_string())
}

/// Append-only version store.
#[derive(Debug)]
pub struct VersionStore {
    dir: Option<PathBuf>,
    blobs: BTreeMap<Digest, Vec<u8>>,
    nodes: Vec<VersionNode>,
    head: VersionId,
}

impl VersionStore {
    /// Store kept in memory only.
    pub fn in_memory(root: &SessionState) -> Result<Self, VersionError> {
        let mut store = Self { dir: None, blobs: BTreeMap::new(), nodes: Vec::new(), head: 0 };
        store.commit(root, None)?;
        Ok(store)
    }

    /// Creates a store under `dir` with `root` as version 0.
    pub fn create(dir: &Path, root: &SessionState) -> Result<Self, VersionError> {
        fs::create_dir_all(dir.join("store"))?;
        if dir.join("graph.jsonl").exists() {
            return Err(storage(format!("{} already holds a session", dir.display())));
        }
        let mut store = Self { dir: Some(dir.to_path_buf()), blobs: BTreeMap::new(), nodes: Vec::new(), head: 0 };
        store.commit(root, None)?;
        Ok(store)
    }

    /// Reopens a store written by [`VersionStore::create`].
    pub fn open(dir: &Path) -> Result<Self, VersionError> {
        let text = fs::read_to_string(dir.join("graph.jsonl"))?;
        let nodes = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<VersionNode>(l).map_err(storage))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, n) in nodes.iter().enumerate() {
            if n.version_id != i as u64 || n.parent.is_some_and(|p| p >= n.version_id) {
                return Err(storage(format!("graph.jsonl line {} is out of order", i + 1)));
            }
        }
        if nodes.is_empty() {
            return Err(storage("graph.jsonl is empty"));
        }
        let head = match fs::read_to_string(dir.join("HEAD")) {
            Ok(s) => s.trim().parse().map_err(storage)?,
            Err(_) => nodes.len() as u64 - 1,
        };
        let store = Self { dir: Some(dir.to_path_buf()), blobs: BTreeMap::new(), nodes, head };
        store.node(head)?;
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn head(&self) -> VersionId {
        self.head
    }

    pub fn head_node(&self) -> &VersionNode {
        &self.nodes[self.head as usize]
    }

    pub fn node(&self, id: VersionId) -> Result<&VersionNode, VersionError> {
        self.nodes.get(id as usize).ok_or(VersionError::UnknownVersion(id))
    }

    /// All nodes in version order; parents always precede children.
    pub fn history(&self) -> &[VersionNode] {
        &self.nodes
    }

    /// Nodes from the root down to `id`.
    pub fn lineage(&self, id: VersionId) -> Result<Vec<&VersionNode>, VersionError> {
        let mut path = vec![self.node(id)?];
        while let Some(p) = path.last().and_then(|n| n.parent) {
            path.push(self.node(p)?);
        }
        path.reverse();
        Ok(path)
    }

    /// Number of distinct blobs written.
    pub fn blob_count(&self) -> usize {
        match &self.dir {
            Some(dir) => fs::read_dir(dir.join("store")).map(|d| d.count()).unwrap_or(0),
            None => self.blobs.len(),
        }
    }

    fn put(&mut self, bytes: Vec<u8>) -> Result<Digest, VersionError> {
        let digest = Digest::of(&bytes);
        if let Some(dir) = &self.dir {
            let path = dir.join("store").join(digest.as_str());
            if !path.exists() {
                let tmp = dir.join("store").join(format!(".{}.tmp", digest.as_str()));
                fs::write(&tmp, &bytes)?;
                fs::rename(&tmp, &path)?;
            }
        } else {
            self.blobs.entry(digest.clone()).or_insert(bytes);
        }
        Ok(digest)
    }

    fn get(&self, digest: &Digest) -> Result<Vec<u8>, VersionError> {
        let bytes = match &self.dir {
            Some(dir) => fs::read(dir.join("store").join(digest.as_str()))?,
            None => self.blobs.get(digest).cloned().ok_or_else(|| storage(format!("missing blob {digest}")))?,
        };
        if Digest::of(&bytes) != *digest {
            return Err(storage(format!("blob {digest} is corrupt")));
        }
        Ok(bytes)
    }

    /// Snapshots `state` as a child of the head and advances the head.
    pub fn commit(&mut self, state: &SessionState, record: Option<&OperatorNode>) -> Result<&VersionNode, VersionError> {
        state.frame.validate().map_err(|e| storage(format!("refusing to commit invalid frame: {e}")))?;
        let snapshot = StateDigests {
            frame: self.put(state.frame.canonical_bytes())?,
            viz: self.put(canonical_json(&state.charts))?,
            coordination: self.put(canonical_json(&state.coord))?,
            registry: self.put(canonical_json(&state.registry))?,
        };
        debug_assert_eq!(snapshot, state.digests());
        let node = VersionNode {
            version_id: self.nodes.len() as u64,
            parent: if self.nodes.is_empty() { None } else { Some(self.head) },
            operator_record: record
                .map(|r| serde_json::from_slice(&spec::serialize(r)).expect("canonical JSON parses")),
            snapshot,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        if let Some(dir) = &self.dir {
            let mut line = serde_json::to_vec(&serde_json::to_value(&node).map_err(storage)?).map_err(storage)?;
            line.push(b'\n');
            OpenOptions::new().create(true).append(true).open(dir.join("graph.jsonl"))?.write_all(&line)?;
        }
        self.head = node.version_id;
        self.nodes.push(node);
        self.write_head()?;
        Ok(self.nodes.last().expect("just pushed"))
    }

    fn write_head(&self) -> Result<(), VersionError> {
        if let Some(dir) = &self.dir {
            fs::write(dir.join("HEAD"), format!("{}\n", self.head))?;
        }
        Ok(())
    }

    /// Rebuilds the state stored at `id` without moving the head.
    pub fn restore(&self, id: VersionId) -> Result<SessionState, VersionError> {
        let node = self.node(id)?;
        let snap = &node.snapshot;
        let frame = VitaFrame::from_canonical_bytes(&self.get(&snap.frame)?).map_err(storage)?;
        let charts: BTreeMap<String, VizSpec> = serde_json::from_slice(&self.get(&snap.viz)?).map_err(storage)?;
        let coord: CoordinationGraph = serde_json::from_slice(&self.get(&snap.coordination)?).map_err(storage)?;
        let registry: OperatorRegistry = serde_json::from_slice(&self.get(&snap.registry)?).map_err(storage)?;
        let state = SessionState { frame: frame.with_provenance(id), charts, coord, registry };
        if state.digests() != *snap {
            return Err(storage(format!("restored state of version {id} does not match its digests")));
        }
        Ok(state)
    }

    /// Moves the head to `id` and returns its state.
    pub fn checkout(&mut self, id: VersionId) -> Result<SessionState, VersionError> {
        let state = self.restore(id)?;
        self.head = id;
        self.write_head()?;
        Ok(state)
    }
}

/// Re-executes the recorded operators from the root to `id` and returns the
/// digests reached after each one, paired with the version they should match.
pub fn replay(store: &VersionStore, id: VersionId) -> Result<Vec<(VersionId, StateDigests)>, VitaError> {
    let lineage = store.lineage(id)?;
    let mut state = store.restore(lineage[0].version_id)?;
    let mut out = vec![(lineage[0].version_id, state.digests())];
    for node in &lineage[1..] {
        let op = node
            .operator()
            .ok_or_else(|| VersionError::Storage(format!("version {} has no operator record", node.version_id)))?;
        let plan = state.compile(&op)?;
        state = state.execute(&plan)?.state;
        out.push((node.version_id, state.digests()));
    }
    Ok(out)
}
