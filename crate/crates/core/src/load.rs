//! RFC-4180 CSV loading into a [`VitaFrame`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::LoadError;
use crate::frame::VitaFrame;
use crate::types::{infer_type, parse_cell, unify, DomainType, Value};

/// Number of leading rows consulted for type inference.
pub const INFERENCE_ROWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Columns promoted to `Text`.
    pub text_columns: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { delimiter: b',', text_columns: Vec::new() }
    }
}

impl LoadOptions {
    pub fn with_text_columns<I, S>(mut self, cols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.text_columns = cols.into_iter().map(Into::into).collect();
        self
    }
}

pub fn load_csv_path(path: &Path, opts: &LoadOptions) -> Result<VitaFrame, LoadError> {
    let bytes = std::fs::read(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    load_csv_bytes(&bytes, opts)
}

pub fn load_csv_bytes(bytes: &[u8], opts: &LoadOptions) -> Result<VitaFrame, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(bytes);
    let parse_err = |e: csv::Error| LoadError::Parse {
        line: e.position().map(|p| p.line()).unwrap_or(1),
        message: e.to_string(),
    };
    let header: Vec<String> = reader.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
    for name in &opts.text_columns {
        if !header.contains(name) {
            return Err(LoadError::MissingTextColumn(name.clone()));
        }
    }
    for (i, name) in header.iter().enumerate() {
        if name.is_empty() || header[..i].contains(name) {
            return Err(LoadError::Parse { line: 1, message: format!("invalid or duplicate header `{name}`") });
        }
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        rows.push(record.iter().map(str::to_string).collect());
    }

    let mut frame = VitaFrame::empty(rows.len());
    for (ci, name) in header.iter().enumerate() {
        let cells: Vec<&str> = rows.iter().map(|r| r[ci].as_str()).collect();
        let dtype = if opts.text_columns.contains(name) {
            DomainType::Text
        } else {
            infer_column(&cells)
        };
        let values = match parse_all(&cells, &dtype) {
            Some(values) => values,
            // a cell past the inference window broke the inferred type
            None => parse_all(&cells, &DomainType::String).expect("strings always parse"),
        };
        let dtype = if values.iter().any(|v| matches!(v, Value::Str(_))) && dtype != DomainType::Text {
            DomainType::String
        } else {
            dtype
        };
        frame = frame
            .add_column(name, dtype, values)
            .expect("loader produces conforming columns");
    }
    Ok(frame)
}

fn infer_column(cells: &[&str]) -> DomainType {
    cells
        .iter()
        .filter(|c| !c.is_empty())
        .take(INFERENCE_ROWS)
        .map(|c| infer_type(c))
        .reduce(|a, b| unify(&a, &b))
        .unwrap_or(DomainType::String)
}

fn parse_all(cells: &[&str], dtype: &DomainType) -> Option<Vec<Value>> {
    cells.iter().map(|c| parse_cell(c, dtype)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_columns_and_promotes_text() {
        let csv = "id,Review,Rating,Recommended\n1,Very comfy shoes!,4.5,true\n2,\"Too small, sadly\",3,false\n";
        let f = load_csv_bytes(csv.as_bytes(), &LoadOptions::default().with_text_columns(["Review"])).unwrap();
        assert_eq!(f.row_count(), 2);
        assert_eq!(f.column("id").unwrap().dtype, DomainType::Int);
        assert_eq!(f.column("Review").unwrap().dtype, DomainType::Text);
        assert_eq!(f.column("Rating").unwrap().dtype, DomainType::Float);
        assert_eq!(f.column("Recommended").unwrap().dtype, DomainType::Bool);
        assert_eq!(f.column("Review").unwrap().values[1], Value::Text("Too small, sadly".into()));
        assert_eq!(f.row_ids(), &[0, 1]);
    }

    #[test]
    fn empty_cells_are_null() {
        let f = load_csv_bytes(b"a,b\n1,\n,x\n", &LoadOptions::default()).unwrap();
        assert_eq!(f.column("a").unwrap().dtype, DomainType::Int);
        assert_eq!(f.column("a").unwrap().values[1], Value::Null);
        assert_eq!(f.column("b").unwrap().values[0], Value::Null);
        f.validate().unwrap();
    }

    #[test]
    fn header_only_gives_zero_rows() {
        let f = load_csv_bytes(b"Review,Rating\n", &LoadOptions::default()).unwrap();
        assert_eq!(f.row_count(), 0);
        assert_eq!(f.columns().len(), 2);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = load_csv_bytes(b"a,b\n1,2\n3\n", &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, LoadError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn late_mismatch_falls_back_to_string() {
        let mut csv = String::from("n\n");
        for i in 0..INFERENCE_ROWS {
            csv.push_str(&format!("{i}\n"));
        }
        csv.push_str("oops\n");
        let f = load_csv_bytes(csv.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(f.column("n").unwrap().dtype, DomainType::String);
        f.validate().unwrap();
    }

    #[test]
    fn custom_delimiter_and_missing_text_column() {
        let opts = LoadOptions { delimiter: b';', text_columns: vec![] };
        let f = load_csv_bytes(b"a;b\n1;2\n", &opts).unwrap();
        assert_eq!(f.columns().len(), 2);
        let err = load_csv_bytes(b"a\n1\n", &LoadOptions::default().with_text_columns(["Review"])).unwrap_err();
        assert_eq!(err, LoadError::MissingTextColumn("Review".into()));
    }
}
