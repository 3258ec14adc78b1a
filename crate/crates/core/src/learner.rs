//! Multinomial logistic regression over pattern feature vectors.
//!
//! `theta` is a `c x (d+1)` row-major matrix; the last column multiplies a
//! constant 1 feature and is left out of the squared L2 penalty.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    classes: usize,
    dim: usize,
    lambda: f64,
    theta: Vec<f64>,
}

/// Labeled examples; labels are class numbers starting at 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub examples: Vec<(FeatureVector, u32)>,
}

impl TrainingSet {
    pub fn new(examples: Vec<(FeatureVector, u32)>) -> Self {
        TrainingSet { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn push(&mut self, x: FeatureVector, label: u32) {
        self.examples.push((x, label));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub max_iterations: usize,
    /// Converged once the largest absolute gradient entry is below this.
    pub gradient_tolerance: f64,
    /// Number of correction pairs kept by L-BFGS.
    pub memory: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub cost: f64,
    pub gradient_max_norm: f64,
}

impl SoftmaxModel {
    pub fn zeros(classes: usize, dim: usize, lambda: f64) -> Result<Self> {
        Self::from_theta(classes, dim, lambda, vec![0.0; classes * (dim + 1)])
    }

    pub fn from_theta(classes: usize, dim: usize, lambda: f64, theta: Vec<f64>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid(format!(
                "softmax needs at least 2 classes, got {classes}"
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "regularization strength must be finite and >= 0, got {lambda}"
            )));
        }
        if theta.len() != classes * (dim + 1) {
            return Err(Error::Dimension {
                expected: classes * (dim + 1),
                actual: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("softmax weights"));
        }
        Ok(SoftmaxModel {
            classes,
            dim,
            lambda,
            theta,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Weights of class `j` (0-based row), intercept last.
    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.dim + 1;
        &self.theta[j * w..(j + 1) * w]
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::from_theta(self.classes, self.dim, self.lambda, theta)
    }

    /// Frobenius norm of the difference of two equally shaped models.
    pub fn distance(&self, other: &SoftmaxModel) -> Result<f64> {
        if self.theta.len() != other.theta.len() {
            return Err(Error::Dimension {
                expected: self.theta.len(),
                actual: other.theta.len(),
            });
        }
        Ok(self
            .theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        Ok(())
    }

    fn scores_with(&self, theta: &[f64], x: &FeatureVector, out: &mut [f64]) {
        let w = self.dim + 1;
        for (j, s) in out.iter_mut().enumerate() {
            let row = &theta[j * w..(j + 1) * w];
            *s = x.dot(&row[..self.dim]) + row[self.dim];
        }
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut p = vec![0.0; self.classes];
        self.scores_with(&self.theta, x, &mut p);
        softmax_in_place(&mut p);
        Ok(p)
    }

    /// Most probable class (1-based); ties go to the smallest label.
    pub fn predict(&self, x: &FeatureVector) -> Result<u32> {
        Ok(argmax(&self.predict_proba(x)?) as u32 + 1)
    }

    fn check_training_set(&self, train: &TrainingSet) -> Result<()> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        for (x, y) in &train.examples {
            self.check_dim(x)?;
            if *y == 0 || *y as usize > self.classes {
                return Err(Error::invalid(format!(
                    "label {y} is outside 1..={}",
                    self.classes
                )));
            }
        }
        Ok(())
    }

    pub fn cost(&self, train: &TrainingSet) -> Result<f64> {
        self.check_training_set(train)?;
        Ok(self.cost_at(&self.theta, train, None))
    }

    pub fn gradient(&self, train: &TrainingSet) -> Result<Vec<f64>> {
        self.check_training_set(train)?;
        let mut grad = vec![0.0; self.theta.len()];
        self.cost_at(&self.theta, train, Some(&mut grad));
        Ok(grad)
    }

    /// Regularized mean negative log-likelihood at `theta`; fills the
    /// gradient when asked. Examples are reduced in input order.
    fn cost_at(&self, theta: &[f64], train: &TrainingSet, grad: Option<&mut [f64]>) -> f64 {
        let w = self.dim + 1;
        let m = train.len() as f64;
        let mut scores = vec![0.0; self.classes];
        let mut nll = 0.0;
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        for (x, y) in &train.examples {
            let yi = *y as usize - 1;
            self.scores_with(theta, x, &mut scores);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_norm = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            nll += log_norm - scores[yi];
            if let Some(g) = grad.as_deref_mut() {
                for j in 0..self.classes {
                    let residual =
                        ((scores[j] - log_norm).exp() - if j == yi { 1.0 } else { 0.0 }) / m;
                    let row = &mut g[j * w..(j + 1) * w];
                    x.axpy(residual, &mut row[..self.dim]);
                    row[self.dim] += residual;
                }
            }
        }
        let mut penalty = 0.0;
        for j in 0..self.classes {
            for k in 0..self.dim {
                let t = theta[j * w + k];
                penalty += t * t;
            }
        }
        if let Some(g) = grad {
            for j in 0..self.classes {
                for k in 0..self.dim {
                    g[j * w + k] += self.lambda * theta[j * w + k];
                }
            }
        }
        nll / m + 0.5 * self.lambda * penalty
    }

    /// Minimizes the cost with L-BFGS, warm-started from this model.
    pub fn train(
        &self,
        train: &TrainingSet,
        opts: &TrainOptions,
    ) -> Result<(SoftmaxModel, TrainReport)> {
        self.check_training_set(train)?;
        let n = self.theta.len();
        let mut x = self.theta.clone();
        let mut g = vec![0.0; n];
        let mut f = self.cost_at(&x, train, Some(&mut g));
        if !f.is_finite() {
            return Err(Error::NonFinite("training cost"));
        }
        let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut iterations = 0;

        while max_abs(&g) >= opts.gradient_tolerance && iterations < opts.max_iterations {
            let mut direction = two_loop(&g, &history);
            let mut slope = dot(&g, &direction);
            if slope >= 0.0 {
                history.clear();
                direction = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
            }
            let mut step = if history.is_empty() {
                (1.0 / max_abs(&g)).min(1.0)
            } else {
                1.0
            };

            let mut accepted = None;
            for _ in 0..60 {
                for i in 0..n {
                    x_new[i] = x[i] + step * direction[i];
                }
                let f_new = self.cost_at(&x_new, train, Some(&mut g_new));
                if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                    accepted = Some(f_new);
                    break;
                }
                step *= 0.5;
            }
            iterations += 1;
            let Some(f_new) = accepted else {
                // no decrease representable in floating point: at the optimum
                // up to rounding
                break;
            };

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if history.len() == opts.memory.max(1) {
                    history.remove(0);
                }
                history.push((s, y, 1.0 / sy));
            }
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
        }
        if !f.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training cost"));
        }
        let gradient_max_norm = max_abs(&g);
        let report = TrainReport {
            iterations,
            converged: gradient_max_norm < opts.gradient_tolerance,
            cost: f,
            gradient_max_norm,
        };
        Ok((self.with_theta(x)?, report))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let doc = StoredModel {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        fs::write(path, serde_json::to_vec_pretty(&doc)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let doc: StoredModel = serde_json::from_slice(&fs::read(path)?)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model file {} v{}",
                doc.format, doc.version
            )));
        }
        let m = doc.model;
        Self::from_theta(m.classes, m.dim, m.lambda, m.theta)
    }
}

const MODEL_FORMAT: &str = "ipd-softmax";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format: String,
    version: u32,
    model: SoftmaxModel,
}

/// L-BFGS two-loop recursion: approximates `-H^-1 g`.
fn two_loop(g: &[f64], history: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = vec![0.0; history.len()];
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        let a = rho * dot(s, &q);
        alphas[i] = a;
        for (qk, yk) in q.iter_mut().zip(y) {
            *qk -= a * yk;
        }
    }
    if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qk in q.iter_mut() {
            *qk *= gamma;
        }
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let b = rho * dot(y, &q);
        for (qk, sk) in q.iter_mut().zip(s) {
            *qk += (alphas[i] - b) * sk;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-class F1 averaged with weights proportional to each class's number of
/// true instances. Undefined precision or recall counts as an F1 of 0.
pub fn weighted_f_score(predictions: &[u32], truths: &[u32]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Empty("no predictions to score"));
    }
    // class -> (true positives, predicted count, true count)
    let mut counts: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
    for (&p, &t) in predictions.iter().zip(truths) {
        counts.entry(p).or_default().1 += 1;
        let e = counts.entry(t).or_default();
        e.2 += 1;
        if p == t {
            e.0 += 1;
        }
    }
    let total = truths.len() as f64;
    Ok(counts
        .values()
        .filter(|(_, _, actual)| *actual > 0)
        .map(|&(tp, predicted, actual)| {
            let f1 = if tp == 0 {
                0.0
            } else {
                let precision = tp as f64 / predicted as f64;
                let recall = tp as f64 / actual as f64;
                2.0 * precision * recall / (precision + recall)
            };
            f1 * actual as f64 / total
        })
        .sum())
}

pub fn accuracy(predictions: &[u32], truths: &[u32]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Empty("no predictions to score"));
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truths.len() as f64)
}
