//! Latent Dirichlet allocation by collapsed Gibbs sampling.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::EngineError;

pub const DEFAULT_ITERATIONS: usize = 200;
pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
}

impl LdaParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, iterations: DEFAULT_ITERATIONS, seed, alpha: None, beta: DEFAULT_BETA }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub vocabulary: Vec<String>,
    /// K rows over the vocabulary.
    pub phi: Vec<Vec<f64>>,
    /// One row of K topic weights per document.
    pub theta: Vec<Vec<f64>>,
    pub seed: u64,
}

fn normalized(row: Vec<f64>) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    row.into_iter().map(|x| x / total).collect()
}

pub fn lda<S: AsRef<str>>(docs: &[Vec<S>], params: &LdaParams) -> Result<TopicModel, EngineError> {
    let k = params.k;
    if k < 2 {
        return Err(EngineError::InvalidK(k));
    }
    let nonempty = docs.iter().filter(|d| !d.is_empty()).count();
    if nonempty < k {
        return Err(EngineError::EmptyCorpus { nonempty, needed: k });
    }
    let vocabulary: Vec<String> = docs
        .iter()
        .flatten()
        .map(|t| t.as_ref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let v = vocabulary.len();
    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.iter()
                .map(|t| vocabulary.binary_search_by(|w| w.as_str().cmp(t.as_ref())).expect("token in vocabulary"))
                .collect()
        })
        .collect();

    let alpha = params.alpha();
    let beta = params.beta;
    let vbeta = v as f64 * beta;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut doc_topic = vec![vec![0usize; k]; docs.len()];
    let mut topic_word = vec![vec![0usize; v]; k];
    let mut topic_total = vec![0usize; k];
    let mut assignment: Vec<Vec<usize>> = words
        .iter()
        .enumerate()
        .map(|(d, ws)| {
            ws.iter()
                .map(|&w| {
                    let z = rng.random_range(0..k);
                    doc_topic[d][z] += 1;
                    topic_word[z][w] += 1;
                    topic_total[z] += 1;
                    z
                })
                .collect()
        })
        .collect();

    let mut weights = vec![0.0; k];
    for _ in 0..params.iterations {
        for (d, ws) in words.iter().enumerate() {
            for (i, &w) in ws.iter().enumerate() {
                let old = assignment[d][i];
                doc_topic[d][old] -= 1;
                topic_word[old][w] -= 1;
                topic_total[old] -= 1;

                let mut total = 0.0;
                for (t, weight) in weights.iter_mut().enumerate() {
                    *weight = (doc_topic[d][t] as f64 + alpha) * (topic_word[t][w] as f64 + beta)
                        / (topic_total[t] as f64 + vbeta);
                    total += *weight;
                }
                let mut u = rng.random::<f64>() * total;
                let mut new = k - 1;
                for (t, weight) in weights.iter().enumerate() {
                    if u < *weight {
                        new = t;
                        break;
                    }
                    u -= weight;
                }

                assignment[d][i] = new;
                doc_topic[d][new] += 1;
                topic_word[new][w] += 1;
                topic_total[new] += 1;
            }
        }
    }

    let theta = doc_topic
        .iter()
        .map(|counts| normalized(counts.iter().map(|&c| c as f64 + alpha).collect()))
        .collect();
    let phi = topic_word
        .iter()
        .map(|counts| normalized(counts.iter().map(|&c| c as f64 + beta).collect()))
        .collect();
    Ok(TopicModel { k, vocabulary, phi, theta, seed: params.seed })
}
