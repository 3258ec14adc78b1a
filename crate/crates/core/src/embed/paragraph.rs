//! Distributed-memory paragraph vectors trained with negative sampling.
//!
//! Each prediction averages the sentence's paragraph vector with the word
//! vectors of the surrounding window and scores the center token against
//! sampled negatives drawn from the unigram distribution raised to 3/4.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::walks::{walk_from, WalkCorpus};
use crate::error::{Error, Result};
use crate::model::{FeatureVector, Pattern, Payload, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingParams {
    pub dim: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub window: usize,
    pub initial_step_size: f64,
    pub inference_steps: usize,
    pub seed: u64,
    /// Start graph-pattern inference walks at a seeded random vertex instead
    /// of the lowest-id vertex.
    pub random_walk_start: bool,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            dim: 100,
            negative_samples: 5,
            epochs: 10,
            window: 5,
            initial_step_size: 0.025,
            inference_steps: 50,
            seed: 1,
            random_walk_start: false,
        }
    }
}

impl EmbeddingParams {
    pub fn min_step_size(&self) -> f64 {
        self.initial_step_size * 1e-4
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return Err(Error::invalid("initial step size must be positive"));
        }
        Ok(())
    }
}

/// Result of inferring a paragraph vector for one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Inferred {
    pub vector: FeatureVector,
    /// Every token was out of vocabulary (or the sentence was empty); the
    /// vector is all zeros.
    pub all_unknown: bool,
}

#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub(crate) params: EmbeddingParams,
    pub(crate) vocab: Vocabulary,
    pub(crate) counts: Vec<u64>,
    /// Input (context) word vectors, row-major `|V| x d`.
    pub(crate) word_vectors: Vec<f64>,
    /// Output vectors scored against the hidden layer, `|V| x d`.
    pub(crate) output_vectors: Vec<f64>,
    /// Paragraph vectors of the training sentences, `n x d`.
    pub(crate) doc_vectors: Vec<f64>,
    pub(crate) epoch_losses: Vec<f64>,
    pub(crate) trained: bool,
    noise: Option<WeightedIndex<f64>>,
}

pub fn train_embedding(corpus: &WalkCorpus, params: EmbeddingParams) -> Result<EmbeddingModel> {
    EmbeddingModel::train(corpus, params)
}

impl EmbeddingModel {
    pub fn new(params: EmbeddingParams) -> Result<Self> {
        params.validate()?;
        Ok(EmbeddingModel {
            params,
            vocab: Vocabulary::new(),
            counts: Vec::new(),
            word_vectors: Vec::new(),
            output_vectors: Vec::new(),
            doc_vectors: Vec::new(),
            epoch_losses: Vec::new(),
            trained: false,
            noise: None,
        })
    }

    pub fn train(corpus: &WalkCorpus, params: EmbeddingParams) -> Result<Self> {
        let mut model = Self::new(params)?;
        model.fit(corpus)?;
        Ok(model)
    }

    pub(crate) fn from_parts(
        params: EmbeddingParams,
        vocab: Vocabulary,
        counts: Vec<u64>,
        word_vectors: Vec<f64>,
        output_vectors: Vec<f64>,
        doc_vectors: Vec<f64>,
        epoch_losses: Vec<f64>,
    ) -> Result<Self> {
        params.validate()?;
        let mut model = Self::new(params)?;
        model.vocab = vocab;
        model.counts = counts;
        model.word_vectors = word_vectors;
        model.output_vectors = output_vectors;
        model.doc_vectors = doc_vectors;
        model.epoch_losses = epoch_losses;
        model.trained = true;
        model.noise = Some(noise_distribution(&model.counts)?);
        Ok(model)
    }

    pub fn params(&self) -> &EmbeddingParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Mean negative-sampling loss per prediction, one entry per epoch.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    pub fn word_vector(&self, token: &str) -> Option<&[f64]> {
        let d = self.dim();
        self.vocab
            .get(token)
            .map(|i| &self.word_vectors[i as usize * d..(i as usize + 1) * d])
    }

    pub fn doc_vector(&self, sentence: usize) -> Option<&[f64]> {
        let d = self.dim();
        self.doc_vectors.get(sentence * d..(sentence + 1) * d)
    }

    pub fn doc_count(&self) -> usize {
        self.doc_vectors.len() / self.dim()
    }

    /// Trains word, output and paragraph vectors on `corpus` from scratch.
    pub fn fit(&mut self, corpus: &WalkCorpus) -> Result<()> {
        if corpus.is_empty() {
            return Err(Error::Empty("embedding corpus has no sentences"));
        }
        let d = self.params.dim;
        let mut vocab = Vocabulary::new();
        let mut counts: Vec<u64> = Vec::new();
        let sentences: Vec<Vec<usize>> = corpus
            .sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|token| {
                        let id = vocab.intern(token) as usize;
                        if id == counts.len() {
                            counts.push(0);
                        }
                        counts[id] += 1;
                        id
                    })
                    .collect()
            })
            .collect();
        if vocab.is_empty() {
            return Err(Error::Empty("embedding corpus has no tokens"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let word_vectors = random_rows(&mut rng, vocab.len(), d);
        let doc_vectors = random_rows(&mut rng, sentences.len(), d);
        self.vocab = vocab;
        self.counts = counts;
        self.word_vectors = word_vectors;
        self.doc_vectors = doc_vectors;
        self.output_vectors = vec![0.0; self.vocab.len() * d];
        self.epoch_losses.clear();
        let noise = noise_distribution(&self.counts)?;

        let total_tokens: usize = sentences.iter().map(Vec::len).sum();
        let schedule = StepSchedule::new(&self.params, self.params.epochs * total_tokens);
        let mut processed = 0usize;
        let mut hidden = vec![0.0; d];
        let mut neu1e = vec![0.0; d];
        let mut targets = Vec::with_capacity(self.params.negative_samples + 1);
        let mut context = Vec::with_capacity(2 * self.params.window);

        for _ in 0..self.params.epochs {
            let mut loss_sum = 0.0;
            let mut predictions = 0usize;
            for (doc, ids) in sentences.iter().enumerate() {
                for pos in 0..ids.len() {
                    let alpha = schedule.at(processed);
                    processed += 1;
                    window_context(ids, pos, self.params.window, &mut context);
                    let count = (context.len() + 1) as f64;
                    hidden.copy_from_slice(&self.doc_vectors[doc * d..(doc + 1) * d]);
                    for &w in &context {
                        add_assign(&mut hidden, &self.word_vectors[w * d..(w + 1) * d]);
                    }
                    scale(&mut hidden, 1.0 / count);

                    sample_targets(
                        ids[pos],
                        &noise,
                        self.params.negative_samples,
                        &mut rng,
                        &mut targets,
                    );
                    neu1e.fill(0.0);
                    let loss = sgd_prediction(
                        &hidden,
                        &targets,
                        &mut self.output_vectors,
                        d,
                        alpha,
                        &mut neu1e,
                    );
                    if !loss.is_finite() {
                        return Err(Error::NonFinite("embedding training loss"));
                    }
                    loss_sum += loss;
                    predictions += 1;

                    scale(&mut neu1e, 1.0 / count);
                    add_assign(&mut self.doc_vectors[doc * d..(doc + 1) * d], &neu1e);
                    for &w in &context {
                        add_assign(&mut self.word_vectors[w * d..(w + 1) * d], &neu1e);
                    }
                }
            }
            self.epoch_losses.push(if predictions == 0 {
                0.0
            } else {
                loss_sum / predictions as f64
            });
        }

        if self
            .word_vectors
            .iter()
            .chain(&self.output_vectors)
            .chain(&self.doc_vectors)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("embedding vectors"));
        }
        self.noise = Some(noise);
        self.trained = true;
        Ok(())
    }

    /// Paragraph vector for an arbitrary sentence with word and output
    /// vectors frozen. Unknown tokens are skipped.
    pub fn infer_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Inferred> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let d = self.dim();
        let ids: Vec<usize> = tokens
            .iter()
            .filter_map(|t| self.vocab.get(t.as_ref()).map(|i| i as usize))
            .collect();
        if ids.is_empty() {
            return Ok(Inferred {
                vector: FeatureVector::dense(vec![0.0; d]),
                all_unknown: true,
            });
        }
        let noise = self.noise.as_ref().ok_or(Error::Untrained)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed ^ fnv1a(tokens));
        let mut paragraph = random_rows(&mut rng, 1, d);

        let schedule = StepSchedule::new(&self.params, self.params.inference_steps * ids.len());
        let mut processed = 0usize;
        let mut hidden = vec![0.0; d];
        let mut neu1e = vec![0.0; d];
        let mut targets = Vec::with_capacity(self.params.negative_samples + 1);
        let mut context = Vec::with_capacity(2 * self.params.window);
        for _ in 0..self.params.inference_steps {
            for pos in 0..ids.len() {
                let alpha = schedule.at(processed);
                processed += 1;
                window_context(&ids, pos, self.params.window, &mut context);
                let count = (context.len() + 1) as f64;
                hidden.copy_from_slice(&paragraph);
                for &w in &context {
                    add_assign(&mut hidden, &self.word_vectors[w * d..(w + 1) * d]);
                }
                scale(&mut hidden, 1.0 / count);
                sample_targets(
                    ids[pos],
                    noise,
                    self.params.negative_samples,
                    &mut rng,
                    &mut targets,
                );
                neu1e.fill(0.0);
                hidden_gradient_step(
                    &hidden,
                    &targets,
                    &self.output_vectors,
                    d,
                    alpha,
                    &mut neu1e,
                );
                scale(&mut neu1e, 1.0 / count);
                add_assign(&mut paragraph, &neu1e);
            }
        }
        if paragraph.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("inferred paragraph vector"));
        }
        Ok(Inferred {
            vector: FeatureVector::dense(paragraph),
            all_unknown: false,
        })
    }

    /// Sentence for a pattern: the event sequence itself, or one edge walk of
    /// a graph pattern (from its lowest-id vertex unless a random start is
    /// configured).
    pub fn pattern_sentence(&self, pattern: &Pattern, vocab: &Vocabulary) -> Result<Vec<String>> {
        match &pattern.payload {
            Payload::Sequence(events) => {
                Ok(events.iter().map(|&e| vocab.name(e).to_owned()).collect())
            }
            Payload::Graph(g) => {
                let Some(lowest) = g.vertices.iter().map(|v| v.0).min() else {
                    return Ok(Vec::new());
                };
                let start = if self.params.random_walk_start {
                    let mut ids: Vec<u32> = g.vertices.iter().map(|v| v.0).collect();
                    ids.sort_unstable();
                    let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed ^ pattern.id as u64);
                    ids[rng.random_range(0..ids.len())]
                } else {
                    lowest
                };
                walk_from(g, vocab, start)
            }
            Payload::ItemSet(_) => Err(Error::invalid(
                "itemset patterns are encoded directly, not embedded",
            )),
        }
    }

    pub fn infer_pattern(&self, pattern: &Pattern, vocab: &Vocabulary) -> Result<Inferred> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let sentence = self.pattern_sentence(pattern, vocab)?;
        self.infer_tokens(&sentence)
    }
}

pub fn infer_pattern_vector(
    model: &EmbeddingModel,
    pattern: &Pattern,
    vocab: &Vocabulary,
) -> Result<Inferred> {
    model.infer_pattern(pattern, vocab)
}

struct StepSchedule {
    start: f64,
    end: f64,
    total: usize,
}

impl StepSchedule {
    fn new(params: &EmbeddingParams, total: usize) -> Self {
        StepSchedule {
            start: params.initial_step_size,
            end: params.min_step_size(),
            total: total.max(1),
        }
    }

    fn at(&self, processed: usize) -> f64 {
        let progress = processed as f64 / self.total as f64;
        self.start - (self.start - self.end) * progress
    }
}

fn noise_distribution(counts: &[u64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))
}

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, d: usize) -> Vec<f64> {
    (0..rows * d)
        .map(|_| (rng.random::<f64>() - 0.5) / d as f64)
        .collect()
}

fn window_context(ids: &[usize], pos: usize, window: usize, out: &mut Vec<usize>) {
    out.clear();
    let lo = pos.saturating_sub(window);
    let hi = (pos + window + 1).min(ids.len());
    out.extend((lo..hi).filter(|&i| i != pos).map(|i| ids[i]));
}

const MAX_REDRAWS: usize = 8;

fn sample_targets(
    center: usize,
    noise: &WeightedIndex<f64>,
    negatives: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<(usize, bool)>,
) {
    out.clear();
    out.push((center, true));
    for _ in 0..negatives {
        // redraw collisions with the center token a few times so the number
        // of negatives (and so the loss scale) stays constant
        let drawn = (0..MAX_REDRAWS)
            .map(|_| noise.sample(rng))
            .find(|&n| n != center);
        if let Some(n) = drawn {
            out.push((n, false));
        }
    }
}

fn add_assign(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn scale(v: &mut [f64], factor: f64) {
    for x in v {
        *x *= factor;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln(sigmoid(x))` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Negative-sampling loss of one prediction:
/// `-ln s(u_target . h) - sum ln s(-u_neg . h)` with `s` the logistic function.
pub fn prediction_loss(hidden: &[f64], targets: &[(usize, bool)], output: &[f64], d: usize) -> f64 {
    targets
        .iter()
        .map(|&(row, positive)| {
            let score = dot(hidden, &output[row * d..(row + 1) * d]);
            if positive {
                -log_sigmoid(score)
            } else {
                -log_sigmoid(-score)
            }
        })
        .sum()
}

/// One SGD step of the output layer. Moves each target's output vector by
/// `-alpha * dL/du` and accumulates `-alpha * dL/dh` into `neu1e`. Returns the
/// loss before the update.
pub fn sgd_prediction(
    hidden: &[f64],
    targets: &[(usize, bool)],
    output: &mut [f64],
    d: usize,
    alpha: f64,
    neu1e: &mut [f64],
) -> f64 {
    let mut loss = 0.0;
    for &(row, positive) in targets {
        let u = &mut output[row * d..(row + 1) * d];
        let score = dot(hidden, u);
        let label = if positive { 1.0 } else { 0.0 };
        loss -= if positive {
            log_sigmoid(score)
        } else {
            log_sigmoid(-score)
        };
        let g = alpha * (label - sigmoid(score));
        for k in 0..d {
            neu1e[k] += g * u[k];
            u[k] += g * hidden[k];
        }
    }
    loss
}

fn hidden_gradient_step(
    hidden: &[f64],
    targets: &[(usize, bool)],
    output: &[f64],
    d: usize,
    alpha: f64,
    neu1e: &mut [f64],
) {
    for &(row, positive) in targets {
        let u = &output[row * d..(row + 1) * d];
        let label = if positive { 1.0 } else { 0.0 };
        let g = alpha * (label - sigmoid(dot(hidden, u)));
        for k in 0..d {
            neu1e[k] += g * u[k];
        }
    }
}

fn fnv1a<S: AsRef<str>>(tokens: &[S]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tokens {
        for b in t.as_ref().bytes().chain(std::iter::once(0xff)) {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}
