use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::Corpus;
use crate::ingest::{tokenize, DanmakuMessage};
use crate::rng::seeded;

pub const DEFAULT_FOLD_IN_ITERATIONS: usize = 30;
/// Number of top words reported for a window theme.
pub const THEME_WORDS: usize = 5;
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("corpus has no non-empty documents")]
    EmptyCorpus,
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("topic index {topic} out of range (K = {k})")]
    BadTopicIndex { topic: usize, k: usize },
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self::with_topics(10)
    }
}

impl LdaParams {
    /// Classical defaults for `k` topics: alpha = 50/K, beta = 0.01, 200 sweeps.
    pub fn with_topics(k: usize) -> Self {
        Self {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 200,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), LdaError> {
        if self.k < 1 {
            return Err(LdaError::BadHyperparameter("K must be >= 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(LdaError::BadHyperparameter(format!("alpha = {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(LdaError::BadHyperparameter(format!("beta = {}", self.beta)));
        }
        if self.iterations < 1 {
            return Err(LdaError::BadHyperparameter("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// A fitted topic model. Immutable after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct LdaModel {
    k: usize,
    alpha: f64,
    beta: f64,
    topic_word_counts: Vec<Vec<u32>>,
    topic_totals: Vec<u64>,
    vocabulary: Vec<String>,
    seed: u64,
    iterations: usize,
    word_index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
    vocabulary: Vec<String>,
    topic_totals: Vec<u64>,
    topic_word_counts: Vec<Vec<u32>>,
}

impl From<LdaModel> for ModelFile {
    fn from(m: LdaModel) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            k: m.k,
            alpha: m.alpha,
            beta: m.beta,
            seed: m.seed,
            iterations: m.iterations,
            vocabulary: m.vocabulary,
            topic_totals: m.topic_totals,
            topic_word_counts: m.topic_word_counts,
        }
    }
}

impl TryFrom<ModelFile> for LdaModel {
    type Error = LdaError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        if f.format_version != FORMAT_VERSION {
            return Err(LdaError::Format(format!("unsupported version {}", f.format_version)));
        }
        LdaParams {
            k: f.k,
            alpha: f.alpha,
            beta: f.beta,
            iterations: f.iterations.max(1),
            seed: f.seed,
        }
        .validate()?;
        let v = f.vocabulary.len();
        if f.topic_word_counts.len() != f.k
            || f.topic_totals.len() != f.k
            || f.topic_word_counts.iter().any(|row| row.len() != v)
        {
            return Err(LdaError::Format("count matrix shape mismatch".into()));
        }
        for (row, &total) in f.topic_word_counts.iter().zip(&f.topic_totals) {
            if row.iter().map(|&c| c as u64).sum::<u64>() != total {
                return Err(LdaError::Format("topic totals do not match counts".into()));
            }
        }
        let word_index = index_of(&f.vocabulary)?;
        Ok(LdaModel {
            k: f.k,
            alpha: f.alpha,
            beta: f.beta,
            topic_word_counts: f.topic_word_counts,
            topic_totals: f.topic_totals,
            vocabulary: f.vocabulary,
            seed: f.seed,
            iterations: f.iterations,
            word_index,
        })
    }
}

fn index_of(vocabulary: &[String]) -> Result<HashMap<String, u32>, LdaError> {
    let mut index = HashMap::with_capacity(vocabulary.len());
    for (i, w) in vocabulary.iter().enumerate() {
        if index.insert(w.clone(), i as u32).is_some() {
            return Err(LdaError::Format(format!("duplicate vocabulary entry {w:?}")));
        }
    }
    Ok(index)
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn topic_word_counts(&self) -> &[Vec<u32>] {
        &self.topic_word_counts
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn word_id(&self, surface: &str) -> Option<u32> {
        self.word_index.get(surface).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, LdaError> {
        serde_json::from_str(json).map_err(|e| LdaError::Format(e.to_string()))
    }
}

/// Draws an index from unnormalized weights accumulated in `cumulative`.
fn draw<R: Rng>(rng: &mut R, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("at least one topic");
    let u = rng.gen::<f64>() * total;
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

/// Fits LDA by collapsed Gibbs sampling. Empty documents are dropped.
pub fn fit_lda(corpus: &Corpus, params: LdaParams) -> Result<LdaModel, LdaError> {
    params.validate()?;
    let docs: Vec<&Vec<u32>> = corpus.documents.iter().filter(|d| !d.is_empty()).collect();
    if docs.is_empty() {
        return Err(LdaError::EmptyCorpus);
    }
    let k = params.k;
    let v = corpus.vocabulary.len();
    let vbeta = v as f64 * params.beta;
    let mut rng = seeded(params.seed);

    let mut word_topic = vec![vec![0u32; v]; k];
    let mut totals = vec![0u64; k];
    let mut doc_topic = vec![vec![0u32; k]; docs.len()];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(docs.len());

    for (d, doc) in docs.iter().enumerate() {
        let mut z = Vec::with_capacity(doc.len());
        for &w in doc.iter() {
            let t = rng.gen_range(0..k);
            word_topic[t][w as usize] += 1;
            totals[t] += 1;
            doc_topic[d][t] += 1;
            z.push(t);
        }
        assignments.push(z);
    }

    let mut cumulative = vec![0.0f64; k];
    for _ in 0..params.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = assignments[d][i];
                word_topic[old][w] -= 1;
                totals[old] -= 1;
                doc_topic[d][old] -= 1;

                let mut acc = 0.0;
                for t in 0..k {
                    acc += (doc_topic[d][t] as f64 + params.alpha)
                        * (word_topic[t][w] as f64 + params.beta)
                        / (totals[t] as f64 + vbeta);
                    cumulative[t] = acc;
                }
                let new = draw(&mut rng, &cumulative);

                word_topic[new][w] += 1;
                totals[new] += 1;
                doc_topic[d][new] += 1;
                assignments[d][i] = new;
            }
        }
    }

    let word_index = index_of(&corpus.vocabulary)?;
    Ok(LdaModel {
        k,
        alpha: params.alpha,
        beta: params.beta,
        topic_word_counts: word_topic,
        topic_totals: totals,
        vocabulary: corpus.vocabulary.clone(),
        seed: params.seed,
        iterations: params.iterations,
        word_index,
    })
}

/// Per-document topic proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMixture {
    pub weights: Vec<f64>,
}

impl TopicMixture {
    /// Index of the largest weight, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// Gibbs fold-in of a new document with the topic-word counts held fixed.
/// Tokens outside the model vocabulary are ignored. The estimate averages the
/// document-topic counts over the second half of the sweeps.
pub fn infer_mixture<S: AsRef<str>>(
    model: &LdaModel,
    tokens: &[S],
    iterations: usize,
    seed: u64,
) -> TopicMixture {
    let k = model.k;
    let words: Vec<usize> = tokens
        .iter()
        .filter_map(|t| model.word_id(t.as_ref()))
        .map(|w| w as usize)
        .collect();
    if words.is_empty() {
        return TopicMixture {
            weights: vec![1.0 / k as f64; k],
        };
    }

    let vbeta = model.vocabulary.len() as f64 * model.beta;
    let mut rng = seeded(seed);
    let mut doc_topic = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            doc_topic[t] += 1;
            t
        })
        .collect();

    let iterations = iterations.max(1);
    let burn_in = iterations / 2;
    let mut accumulated = vec![0.0f64; k];
    let mut cumulative = vec![0.0f64; k];
    for sweep in 0..iterations {
        for (i, &w) in words.iter().enumerate() {
            doc_topic[z[i]] -= 1;
            let mut acc = 0.0;
            for t in 0..k {
                acc += (doc_topic[t] as f64 + model.alpha)
                    * (model.topic_word_counts[t][w] as f64 + model.beta)
                    / (model.topic_totals[t] as f64 + vbeta);
                cumulative[t] = acc;
            }
            let new = draw(&mut rng, &cumulative);
            doc_topic[new] += 1;
            z[i] = new;
        }
        if sweep >= burn_in {
            for t in 0..k {
                accumulated[t] += doc_topic[t] as f64 + model.alpha;
            }
        }
    }
    let total: f64 = accumulated.iter().sum();
    TopicMixture {
        weights: accumulated.into_iter().map(|a| a / total).collect(),
    }
}

/// The `k` highest-count words of `topic` with nonzero count, ties broken by
/// vocabulary index.
pub fn top_words(model: &LdaModel, topic: usize, k: usize) -> Result<Vec<String>, LdaError> {
    let row = model
        .topic_word_counts
        .get(topic)
        .ok_or(LdaError::BadTopicIndex { topic, k: model.k })?;
    let mut ranked: Vec<(usize, u32)> = row
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(i, _)| model.vocabulary[i].clone())
        .collect())
}

/// High-level theme of a window.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Theme {
    pub topic: usize,
    pub top_words: Vec<String>,
    pub support: usize,
}

/// Treats the whole window as one aggregate document and reports its
/// dominant topic. A window with no in-vocabulary tokens gets no theme words.
pub fn extract_theme(model: &LdaModel, window: &[DanmakuMessage], seed: u64) -> Theme {
    if window.is_empty() {
        return Theme::default();
    }
    let tokens: Vec<String> = window
        .iter()
        .flat_map(|m| tokenize(&m.text))
        .map(|t| t.surface)
        .collect();
    if !tokens.iter().any(|t| model.word_id(t).is_some()) {
        return Theme {
            support: window.len(),
            ..Theme::default()
        };
    }
    let mixture = infer_mixture(model, &tokens, DEFAULT_FOLD_IN_ITERATIONS, seed);
    let topic = mixture.argmax();
    Theme {
        topic,
        top_words: top_words(model, topic, THEME_WORDS).expect("argmax is a valid topic"),
        support: window.len(),
    }
}
