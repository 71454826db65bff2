use std::collections::{BTreeMap, BTreeSet};

use crate::error::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    None,
}

impl Norm {
    pub fn parse(s: &str) -> Option<Norm> {
        match s {
            "l2" => Some(Norm::L2),
            "none" => Some(Norm::None),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TfidfParams {
    /// Minimum number of documents a token must appear in.
    pub min_df: usize,
    pub norm: Norm,
}

impl Default for TfidfParams {
    fn default() -> Self {
        Self { min_df: 1, norm: Norm::L2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    /// Sorted vocabulary; a token's position is its vector index.
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    pub params: TfidfParams,
}

impl TfidfModel {
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }
}

/// Fits the model and returns one dense row per document.
///
/// `tf = count / doc_len`, `idf = ln((1 + N) / (1 + df)) + 1`, rows optionally
/// L2-normalized. Empty documents yield zero rows.
pub fn tfidf<S: AsRef<str>>(docs: &[Vec<S>], params: TfidfParams) -> Result<(Vec<Vec<f64>>, TfidfModel), EngineError> {
    let n = docs.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for tok in distinct {
            *df.entry(tok).or_default() += 1;
        }
    }
    let kept: Vec<(&str, usize)> = df.into_iter().filter(|(_, d)| *d >= params.min_df).collect();
    if kept.is_empty() {
        return Err(EngineError::EmptyVocabulary);
    }
    let vocabulary: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    let idf: Vec<f64> = kept
        .iter()
        .map(|(_, d)| ((1.0 + n as f64) / (1.0 + *d as f64)).ln() + 1.0)
        .collect();
    let model = TfidfModel { vocabulary, idf, params };

    let rows = docs
        .iter()
        .map(|doc| {
            let mut row = vec![0.0; model.vocabulary.len()];
            if doc.is_empty() {
                return row;
            }
            let len = doc.len() as f64;
            for tok in doc {
                if let Some(j) = model.index_of(tok.as_ref()) {
                    row[j] += 1.0;
                }
            }
            for (x, idf) in row.iter_mut().zip(&model.idf) {
                *x = *x / len * idf;
            }
            if params.norm == Norm::L2 {
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|x| *x /= norm);
                }
            }
            row
        })
        .collect();
    Ok((rows, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn single_document_example() {
        let (rows, model) = tfidf(&[doc("a a b")], TfidfParams::default()).unwrap();
        assert_eq!(model.vocabulary, vec!["a", "b"]);
        assert_eq!(model.idf, vec![1.0, 1.0]);
        assert!((rows[0][0] - 0.8944).abs() < 1e-4);
        assert!((rows[0][1] - 0.4472).abs() < 1e-4);
        // exact: (2, 1) / sqrt(5)
        assert!((rows[0][0] - 2.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identical_docs_identical_rows() {
        let (rows, _) = tfidf(&[doc("x y y"), doc("x y y"), doc("z")], TfidfParams::default()).unwrap();
        assert_eq!(rows[0], rows[1]);
    }

    #[test]
    fn min_df_filters_and_can_empty_vocabulary() {
        let docs = [doc("a b"), doc("a c")];
        let (_, model) = tfidf(&docs, TfidfParams { min_df: 2, norm: Norm::L2 }).unwrap();
        assert_eq!(model.vocabulary, vec!["a"]);
        let err = tfidf(&docs, TfidfParams { min_df: 3, norm: Norm::L2 }).unwrap_err();
        assert_eq!(err, EngineError::EmptyVocabulary);
        let none: [Vec<String>; 0] = [];
        assert_eq!(tfidf(&none, TfidfParams::default()).unwrap_err(), EngineError::EmptyVocabulary);
    }

    #[test]
    fn empty_document_is_zero_row_and_idf_nonnegative() {
        let (rows, model) = tfidf(&[doc("a"), doc(""), doc("a b")], TfidfParams::default()).unwrap();
        assert!(rows[1].iter().all(|x| *x == 0.0));
        assert!(model.idf.iter().all(|x| *x >= 0.0));
    }
}
