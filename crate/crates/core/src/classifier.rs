//! Multiclass softmax (logistic) regression.
//!
//! Features are z-scored with statistics from the training rows, then fed to
//! a linear layer with a bias column. Training minimizes the mean
//! cross-entropy plus `l2_lambda / 2 * |W|^2` (bias excluded) by mini-batch
//! gradient descent from zero weights, so a fixed seed gives bit-identical
//! models.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::stratified_folds;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    /// Rows per gradient step; the whole set when it has fewer rows.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 300,
            l2_lambda: 1e-4,
            batch_size: 4096,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if !(self.l2_lambda >= 0.0) {
            return Err(Error::InvalidArgument("l2_lambda must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Per-feature standardization. Zero-variance features keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Scaler {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = libm::sqrt(v / n);
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, row: &[f64], out: &mut Vec<f64>) {
        out.extend(row.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s));
    }
}

/// Numerically stable in-place softmax.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean cross-entropy plus L2 penalty, and its gradient.
///
/// `weights` is row-major `n_classes x (d + 1)` with the bias last; `x` is
/// row-major `labels.len() x d` of already standardized features.
pub fn loss_and_gradient(
    weights: &[f64],
    x: &[f64],
    labels: &[usize],
    n_classes: usize,
    l2_lambda: f64,
) -> (f64, Vec<f64>) {
    let n = labels.len();
    let stride = weights.len() / n_classes;
    let d = stride - 1;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    let mut z = vec![0.0; n_classes];
    for (i, &y) in labels.iter().enumerate() {
        let row = &x[i * d..(i + 1) * d];
        scores(weights, row, n_classes, &mut z);
        softmax_in_place(&mut z);
        loss -= libm::log(z[y].max(1e-300));
        for c in 0..n_classes {
            let err = z[c] - if c == y { 1.0 } else { 0.0 };
            let g = &mut grad[c * stride..(c + 1) * stride];
            for (gj, xj) in g[..d].iter_mut().zip(row) {
                *gj += err * xj;
            }
            g[d] += err;
        }
    }
    let inv = 1.0 / n.max(1) as f64;
    loss *= inv;
    grad.iter_mut().for_each(|g| *g *= inv);
    for c in 0..n_classes {
        for j in 0..d {
            let w = weights[c * stride + j];
            loss += 0.5 * l2_lambda * w * w;
            grad[c * stride + j] += l2_lambda * w;
        }
    }
    (loss, grad)
}

#[inline]
fn scores(weights: &[f64], row: &[f64], n_classes: usize, out: &mut [f64]) {
    let stride = row.len() + 1;
    for (c, o) in out.iter_mut().enumerate().take(n_classes) {
        let w = &weights[c * stride..(c + 1) * stride];
        *o = w[..row.len()].iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + w[row.len()];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc")]
pub struct SoftmaxModel {
    classes: Vec<String>,
    scaler: Scaler,
    /// `classes.len()` rows of `dim + 1` weights, bias last.
    weights: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ModelDoc {
    classes: Vec<String>,
    scaler: Scaler,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<ModelDoc> for SoftmaxModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        SoftmaxModel::from_parts(doc.classes, doc.scaler, doc.weights)
    }
}

fn check_rows(features: &[Vec<f64>]) -> Result<usize> {
    let d = features.first().map(Vec::len).ok_or(Error::Empty("feature matrix"))?;
    for (i, r) in features.iter().enumerate() {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i, col: j });
        }
    }
    Ok(d)
}

/// Trains a model; `classes[labels[i]]` names row `i`.
pub fn train(features: &[Vec<f64>], labels: &[usize], classes: &[String], cfg: &TrainConfig) -> Result<SoftmaxModel> {
    fit(features, labels, classes, cfg, false).map(|(m, _)| m)
}

/// Like [`train`], also returning the training loss after every epoch.
pub fn train_with_history(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: &[String],
    cfg: &TrainConfig,
) -> Result<(SoftmaxModel, Vec<f64>)> {
    fit(features, labels, classes, cfg, true)
}

fn fit(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: &[String],
    cfg: &TrainConfig,
    record: bool,
) -> Result<(SoftmaxModel, Vec<f64>)> {
    cfg.validate()?;
    let d = check_rows(features)?;
    if labels.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let n_classes = classes.len();
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }
    let mut present = vec![false; n_classes];
    labels.iter().for_each(|&l| present[l] = true);
    let n_present = present.iter().filter(|&&p| p).count();
    if n_present < 2 {
        return Err(Error::TooFewClasses(n_present));
    }

    let scaler = Scaler::fit(features);
    let mut x = Vec::with_capacity(features.len() * d);
    for r in features {
        scaler.transform_into(r, &mut x);
    }
    let stride = d + 1;
    let mut w = vec![0.0; n_classes * stride];
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let full_batch = cfg.batch_size >= labels.len();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch_x = Vec::new();
    let mut batch_y = Vec::new();

    for _ in 0..cfg.epochs {
        if full_batch {
            let (_, grad) = loss_and_gradient(&w, &x, labels, n_classes, cfg.l2_lambda);
            w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= cfg.learning_rate * g);
        } else {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                batch_x.clear();
                batch_y.clear();
                for &i in chunk {
                    batch_x.extend_from_slice(&x[i * d..(i + 1) * d]);
                    batch_y.push(labels[i]);
                }
                let (_, grad) = loss_and_gradient(&w, &batch_x, &batch_y, n_classes, cfg.l2_lambda);
                w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= cfg.learning_rate * g);
            }
        }
        if record {
            history.push(loss_and_gradient(&w, &x, labels, n_classes, cfg.l2_lambda).0);
        }
    }

    let weights = w.chunks(stride).map(<[f64]>::to_vec).collect();
    Ok((
        SoftmaxModel {
            classes: classes.to_vec(),
            scaler,
            weights,
        },
        history,
    ))
}

impl SoftmaxModel {
    pub fn from_parts(classes: Vec<String>, scaler: Scaler, weights: Vec<Vec<f64>>) -> Result<Self> {
        let d = scaler.dim();
        if scaler.std.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: scaler.std.len(),
            });
        }
        if weights.len() != classes.len() {
            return Err(Error::DimensionMismatch {
                expected: classes.len(),
                got: weights.len(),
            });
        }
        if let Some(bad) = weights.iter().find(|w| w.len() != d + 1) {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                got: bad.len(),
            });
        }
        Ok(SoftmaxModel {
            classes,
            scaler,
            weights,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    /// Raw class scores before the softmax.
    pub fn logits(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: r.len(),
            });
        }
        let mut x = Vec::with_capacity(r.len());
        self.scaler.transform_into(r, &mut x);
        Ok(self
            .weights
            .iter()
            .map(|w| w[..x.len()].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + w[x.len()])
            .collect())
    }

    /// Class probability vector.
    pub fn predict_proba(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.logits(r)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Most probable class and its probability (the confidence). Ties go to
    /// the lowest class index.
    pub fn predict_with_confidence(&self, r: &[f64]) -> Result<(usize, f64)> {
        Ok(argmax(&self.predict_proba(r)?))
    }

    pub fn predict(&self, r: &[f64]) -> Result<usize> {
        self.predict_with_confidence(r).map(|(c, _)| c)
    }

    /// Predicts a row-major batch of `out.len()` rows.
    pub fn predict_batch(&self, rows: &[f64], out: &mut [usize]) -> Result<()> {
        let d = self.dim();
        if rows.len() != out.len() * d {
            return Err(Error::DimensionMismatch {
                expected: out.len() * d,
                got: rows.len(),
            });
        }
        let mut x = Vec::with_capacity(d);
        let mut z = vec![0.0; self.classes.len()];
        for (row, o) in rows.chunks_exact(d.max(1)).zip(out.iter_mut()) {
            x.clear();
            self.scaler.transform_into(row, &mut x);
            for (zc, w) in z.iter_mut().zip(&self.weights) {
                *zc = w[..d].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + w[d];
            }
            *o = argmax(&z).0;
        }
        Ok(())
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        if features.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let mut correct = 0usize;
        for (r, &y) in features.iter().zip(labels) {
            if self.predict(r)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / features.len() as f64)
    }
}

/// Index and value of the maximum; the first one wins ties.
pub fn argmax(u: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in u.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Cross-validated accuracy summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean of the per-fold accuracies.
    pub accuracy: f64,
    /// Population standard deviation across folds.
    pub std: f64,
    pub per_fold: Vec<f64>,
    /// Pooled over folds; row `i` is the distribution of predictions for
    /// true class `i`.
    pub confusion: Vec<Vec<f64>>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Row-normalizes a count matrix; empty rows stay zero.
pub fn normalize_rows(counts: &[Vec<u64>]) -> Vec<Vec<f64>> {
    counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

/// Stratified k-fold evaluation; folds are drawn with `cfg.seed`.
pub fn kfold_evaluate(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: &[String],
    k: usize,
    cfg: &TrainConfig,
) -> Result<EvalReport> {
    let folds = stratified_folds(labels, k, cfg.seed)?;
    let c = classes.len();
    let mut confusion = vec![vec![0u64; c]; c];
    let mut per_fold = Vec::with_capacity(k);
    for fold in &folds {
        let tr_x: Vec<Vec<f64>> = fold.train.iter().map(|&i| features[i].clone()).collect();
        let tr_y: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
        let model = train(&tr_x, &tr_y, classes, cfg)?;
        let mut correct = 0usize;
        for &i in &fold.test {
            let p = model.predict(&features[i])?;
            confusion[labels[i]][p] += 1;
            if p == labels[i] {
                correct += 1;
            }
        }
        per_fold.push(correct as f64 / fold.test.len() as f64);
    }
    let (accuracy, std) = mean_std(&per_fold);
    Ok(EvalReport {
        accuracy,
        std,
        per_fold,
        confusion: normalize_rows(&confusion),
    })
}
