//! The vitaframe: an immutable columnar table whose columns carry a domain
//! type and a typed metadata map.
//!
//! Every operation returns a new frame. Row ids are assigned at load time and
//! survive all transforms; filtering is expressed as row-id sets elsewhere,
//! never by renumbering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::digest::{canonical_json, Digest};
use crate::error::FrameError;
use crate::types::{DomainType, Value};

pub type RowId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEntry {
    pub dtype: DomainType,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub dtype: DomainType,
    pub values: Vec<Value>,
    pub metadata: BTreeMap<String, MetaEntry>,
}

impl Column {
    pub fn new(name: impl Into<String>, dtype: DomainType, values: Vec<Value>) -> Self {
        Self { name: name.into(), dtype, values, metadata: BTreeMap::new() }
    }

    pub fn meta(&self, key: &str) -> Option<&MetaEntry> {
        self.metadata.get(key)
    }

    /// Common length of the non-null vectors, if the column is a vector column.
    pub fn vector_dim(&self) -> Option<usize> {
        self.values.iter().find_map(|v| match v {
            Value::Vector(xs) => Some(xs.len()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitaFrame {
    columns: Vec<Column>,
    row_ids: Vec<RowId>,
    /// Version the frame was restored from; not part of its content digest.
    #[serde(skip)]
    provenance: Option<u64>,
}

impl VitaFrame {
    pub fn empty(rows: usize) -> Self {
        Self { columns: Vec::new(), row_ids: (0..rows as RowId).collect(), provenance: None }
    }

    pub fn with_row_ids(row_ids: Vec<RowId>) -> Self {
        Self { columns: Vec::new(), row_ids, provenance: None }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn row_count(&self) -> usize {
        self.row_ids.len()
    }

    pub fn provenance(&self) -> Option<u64> {
        self.provenance
    }

    pub fn with_provenance(mut self, version: u64) -> Self {
        self.provenance = Some(version);
        self
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn try_column(&self, name: &str) -> Result<&Column, FrameError> {
        self.column(name).ok_or_else(|| FrameError::UnknownColumn(name.to_string()))
    }

    fn position(&self, name: &str) -> Result<usize, FrameError> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| FrameError::UnknownColumn(name.to_string()))
    }

    /// Row index of a row id, if present.
    pub fn index_of(&self, id: RowId) -> Option<usize> {
        self.row_ids.iter().position(|r| *r == id)
    }

    fn check_values(&self, name: &str, dtype: &DomainType, values: &[Value]) -> Result<(), FrameError> {
        if values.len() != self.row_count() {
            return Err(FrameError::LengthMismatch { expected: self.row_count(), found: values.len() });
        }
        let mismatch = |i: usize| FrameError::TypeMismatch {
            location: format!("{name}[{i}]"),
            expected: dtype.clone(),
        };
        if !dtype.is_well_formed() {
            return Err(mismatch(0));
        }
        if let Some(i) = values.iter().position(|v| !v.conforms_to(dtype)) {
            return Err(mismatch(i));
        }
        if let DomainType::Vector(_) = dtype {
            let dim = values.iter().find_map(|v| match v {
                Value::Vector(xs) => Some(xs.len()),
                _ => None,
            });
            if let Some(dim) = dim {
                if let Some(i) = values
                    .iter()
                    .position(|v| matches!(v, Value::Vector(xs) if xs.len() != dim))
                {
                    return Err(mismatch(i));
                }
            }
        }
        Ok(())
    }

    /// Appends a new column (the `create` action).
    pub fn add_column(&self, name: &str, dtype: DomainType, values: Vec<Value>) -> Result<Self, FrameError> {
        if self.column(name).is_some() {
            return Err(FrameError::DuplicateColumn(name.to_string()));
        }
        self.check_values(name, &dtype, &values)?;
        let mut next = self.clone();
        next.columns.push(Column::new(name, dtype, values));
        Ok(next)
    }

    /// Replaces a column's content (the `update` action). All metadata of the
    /// column is dropped since derived aggregates would be stale.
    pub fn update_column(
        &self,
        name: &str,
        values: Vec<Value>,
        dtype: Option<DomainType>,
    ) -> Result<Self, FrameError> {
        let pos = self.position(name)?;
        let dtype = dtype.unwrap_or_else(|| self.columns[pos].dtype.clone());
        self.check_values(name, &dtype, &values)?;
        let mut next = self.clone();
        next.columns[pos] = Column::new(name, dtype, values);
        Ok(next)
    }

    pub fn drop_column(&self, name: &str) -> Result<Self, FrameError> {
        let pos = self.position(name)?;
        let mut next = self.clone();
        next.columns.remove(pos);
        Ok(next)
    }

    /// Creates or overwrites a metadata entry (the `add` action).
    pub fn set_metadata(&self, column: &str, key: &str, dtype: DomainType, value: Value) -> Result<Self, FrameError> {
        let pos = self.position(column)?;
        if !dtype.is_well_formed() || !value.conforms_to(&dtype) {
            return Err(FrameError::TypeMismatch { location: format!("{column}.{key}"), expected: dtype });
        }
        let mut next = self.clone();
        next.columns[pos].metadata.insert(key.to_string(), MetaEntry { dtype, value });
        Ok(next)
    }

    /// Content digest over row ids, column order, names, types, values and metadata.
    pub fn snapshot_hash(&self) -> Digest {
        Digest::of(&self.canonical_bytes())
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_json(self)
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Walks every structural invariant; returns the first violation.
    pub fn validate(&self) -> Result<(), FrameError> {
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(FrameError::DuplicateColumn(c.name.clone()));
            }
            self.check_values(&c.name, &c.dtype, &c.values)?;
            for (key, entry) in &c.metadata {
                if !entry.dtype.is_well_formed() || !entry.value.conforms_to(&entry.dtype) {
                    return Err(FrameError::TypeMismatch {
                        location: format!("{}.{key}", c.name),
                        expected: entry.dtype.clone(),
                    });
                }
            }
        }
        let mut sorted = self.row_ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.row_ids.len() {
            return Err(FrameError::TypeMismatch { location: "row_ids".into(), expected: DomainType::Int });
        }
        Ok(())
    }

    /// Schema view used by the compiler.
    pub fn schema(&self) -> FrameSchema {
        FrameSchema {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnSchema {
                    name: c.name.clone(),
                    dtype: c.dtype.clone(),
                    metadata: c.metadata.iter().map(|(k, e)| (k.clone(), e.dtype.clone())).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub dtype: DomainType,
    pub metadata: BTreeMap<String, DomainType>,
}

/// Column names, types and metadata types without the data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSchema {
    pub columns: Vec<ColumnSchema>,
}

impl FrameSchema {
    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_mut(&mut self, name: &str) -> Option<&mut ColumnSchema> {
        self.columns.iter_mut().find(|c| c.name == name)
    }

    pub fn text_columns(&self) -> impl Iterator<Item = &ColumnSchema> {
        self.columns.iter().filter(|c| c.dtype == DomainType::Text)
    }
}
