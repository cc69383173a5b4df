//! Linear SVMs over feature vectors: max-min normalization, binary training
//! by stochastic subgradient descent on the primal hinge objective, and a
//! one-against-one multiclass wrapper with majority voting.
//!
//! The bias is handled as an extra constant input and is regularized with the
//! weights.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::synthetic::rng;
use crate::{Error, Result};

/// Per-column min/max fitted on training data and reused on held-out data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let first = x.first().ok_or(Error::Empty("feature matrix"))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for row in x {
            check_len(row.len(), min.len())?;
            for ((lo, hi), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Not clamped: values outside the fitted range map outside `[0, 1]`.
    /// Constant columns map to 0.
    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_len(row.len(), self.min.len())?;
        Ok(row
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }

    pub fn transform_all(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform(r)).collect()
    }
}

pub fn minmax_normalize(x: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, MinMax)> {
    let scaler = MinMax::fit(x)?;
    Ok((scaler.transform_all(x)?, scaler))
}

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::DimensionMismatch {
            expected: format!("{expected} features"),
            actual: format!("{actual} features"),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lambda: 1e-3, epochs: 50, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    /// `λ/2 (‖w‖² + b²) + mean hinge loss`
    pub fn objective(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let reg = 0.5 * self.lambda * (self.w.iter().map(|v| v * v).sum::<f64>() + self.b * self.b);
        let hinge = x
            .iter()
            .zip(y)
            .map(|(row, &label)| (1.0 - label * self.decision(row)).max(0.0))
            .sum::<f64>()
            / x.len() as f64;
        reg + hinge
    }
}

/// Labels must be ±1 with both signs present.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> Result<BinarySvm> {
    if x.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    check_len(y.len(), x.len())?;
    if cfg.lambda.is_nan() || cfg.lambda <= 0.0 || cfg.epochs == 0 {
        return Err(Error::InvalidConfig("lambda and epochs must be positive".into()));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidConfig("binary labels must be +1 or -1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    let dim = x[0].len();
    for row in x {
        check_len(row.len(), dim)?;
    }
    let lambda = cfg.lambda;
    let radius = 1.0 / lambda.sqrt();
    // last entry is the bias
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut r = rng(cfg.seed);
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            step += 1;
            let eta = 1.0 / (lambda * step as f64);
            let margin = y[i] * (w[..dim].iter().zip(&x[i]).map(|(a, b)| a * b).sum::<f64>() + w[dim]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w[..dim].iter_mut().zip(&x[i]) {
                    *wj += eta * y[i] * xj;
                }
                w[dim] += eta * y[i];
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                w.iter_mut().for_each(|v| *v *= radius / norm);
            }
        }
    }
    let b = w.pop().expect("bias entry");
    Ok(BinarySvm { w, b, lambda })
}

/// Classifier for the pair `(positive, negative)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairClassifier {
    pub positive: usize,
    pub negative: usize,
    pub svm: BinarySvm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvoModel {
    pub classes: usize,
    pub classifiers: Vec<PairClassifier>,
}

/// One binary SVM per unordered class pair; labels are `0..classes`.
pub fn train_ovo(x: &[Vec<f64>], labels: &[usize], classes: usize, cfg: &SvmConfig) -> Result<OvoModel> {
    check_len(labels.len(), x.len())?;
    if classes < 2 {
        return Err(Error::SingleClass);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidConfig(format!("label {bad} outside 0..{classes}")));
    }
    let mut classifiers = Vec::with_capacity(classes * (classes - 1) / 2);
    for a in 0..classes {
        for b in a + 1..classes {
            let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = x
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == a || l == b)
                .map(|(row, &l)| (row.clone(), if l == a { 1.0 } else { -1.0 }))
                .unzip();
            let pair_cfg = SvmConfig { seed: cfg.seed.wrapping_add((a * classes + b) as u64), ..cfg.clone() };
            classifiers.push(PairClassifier { positive: a, negative: b, svm: train_binary(&xs, &ys, &pair_cfg)? });
        }
    }
    Ok(OvoModel { classes, classifiers })
}

impl OvoModel {
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        let mut votes = vec![0usize; self.classes];
        for c in &self.classifiers {
            check_len(x.len(), c.svm.w.len())?;
            let winner = if c.svm.decision(x) >= 0.0 { c.positive } else { c.negative };
            votes[winner] += 1;
        }
        Ok(votes)
    }
}

/// Majority vote; ties go to the smallest class index.
pub fn predict_ovo(model: &OvoModel, x: &[f64]) -> Result<usize> {
    let votes = model.votes(x)?;
    Ok(argmax_first(&votes))
}

fn argmax_first(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

/// Mean per-class recall over the classes present in `labels`.
pub fn balanced_accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    check_len(predictions.len(), labels.len())?;
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let mut hits = vec![0usize; classes];
    let mut totals = vec![0usize; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        totals[l] += 1;
        hits[l] += (p == l) as usize;
    }
    let present: Vec<f64> = hits
        .iter()
        .zip(&totals)
        .filter(|(_, &t)| t > 0)
        .map(|(&h, &t)| h as f64 / t as f64)
        .collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Normalizer plus one-against-one classifiers, as persisted to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub scaler: MinMax,
    pub ovo: OvoModel,
}

impl SvmModel {
    pub fn fit(x: &[Vec<f64>], labels: &[usize], classes: usize, cfg: &SvmConfig) -> Result<Self> {
        let (xn, scaler) = minmax_normalize(x)?;
        Ok(Self { scaler, ovo: train_ovo(&xn, labels, classes, cfg)? })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        predict_ovo(&self.ovo, &self.scaler.transform(x)?)
    }
}
