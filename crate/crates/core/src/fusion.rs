//! Fusion head: backbone features and reduced topological features are
//! weighted by a learnable rate `α = σ(a_raw)`, concatenated, and fed to a
//! linear softmax classifier.
//!
//! ```text
//! h = relu(W_red · v_topo + b_red)
//! z = [(1 − α) · v_backbone ; α · h]
//! p = softmax(W_cls · z + b_cls)
//! ```

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::svm::MinMax;
use crate::synthetic::rng;
pub use crate::synthetic::FusionSample;
use crate::{Error, Result};

/// Initial `a_raw`, giving `α = σ(0.5) ≈ 0.62246`.
pub const INITIAL_A_RAW: f64 = 0.5;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidConfig("ragged matrix rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, values: rows.concat() })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                actual: format!("length {}", x.len()),
            });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.values.len() != self.rows * self.cols {
            return Err(Error::InvalidConfig(format!(
                "matrix {}x{} holds {} values",
                self.rows,
                self.cols,
                self.values.len()
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Head parameters. Gradients use the same layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionHead {
    pub a_raw: f64,
    pub w_red: Matrix,
    pub b_red: Vec<f64>,
    pub w_cls: Matrix,
    pub b_cls: Vec<f64>,
}

impl FusionHead {
    /// He-style random weights, zero biases, `a_raw = 0.5`.
    pub fn init(backbone_dim: usize, topo_dim: usize, reduced_dim: usize, classes: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let mut random = |rows: usize, cols: usize| {
            let sd = (2.0 / cols.max(1) as f64).sqrt();
            let normal = Normal::new(0.0, sd).expect("valid sigma");
            Matrix { rows, cols, values: (0..rows * cols).map(|_| normal.sample(&mut r)).collect() }
        };
        let w_red = random(reduced_dim, topo_dim);
        let w_cls = random(classes, backbone_dim + reduced_dim);
        Self { a_raw: INITIAL_A_RAW, w_red, b_red: vec![0.0; reduced_dim], w_cls, b_cls: vec![0.0; classes] }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            a_raw: 0.0,
            w_red: Matrix::zeros(self.w_red.rows, self.w_red.cols),
            b_red: vec![0.0; self.b_red.len()],
            w_cls: Matrix::zeros(self.w_cls.rows, self.w_cls.cols),
            b_cls: vec![0.0; self.b_cls.len()],
        }
    }

    pub fn alpha(&self) -> f64 {
        sigmoid(self.a_raw)
    }

    pub fn topo_dim(&self) -> usize {
        self.w_red.cols
    }

    pub fn reduced_dim(&self) -> usize {
        self.w_red.rows
    }

    pub fn backbone_dim(&self) -> usize {
        self.w_cls.cols - self.reduced_dim()
    }

    pub fn classes(&self) -> usize {
        self.w_cls.rows
    }

    pub fn validate(&self) -> Result<()> {
        self.w_red.validate()?;
        self.w_cls.validate()?;
        if self.b_red.len() != self.w_red.rows
            || self.b_cls.len() != self.w_cls.rows
            || self.w_cls.cols < self.w_red.rows
            || !self.a_raw.is_finite()
        {
            return Err(Error::InvalidConfig("inconsistent fusion head shapes".into()));
        }
        Ok(())
    }

    /// All parameters in a fixed order: a_raw, w_red, b_red, w_cls, b_cls.
    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        std::iter::once(&mut self.a_raw)
            .chain(self.w_red.values.iter_mut())
            .chain(self.b_red.iter_mut())
            .chain(self.w_cls.values.iter_mut())
            .chain(self.b_cls.iter_mut())
    }

    fn axpy(&mut self, scale: f64, grad: &FusionHead) {
        let mut g = grad.clone();
        for (p, d) in self.params_mut().zip(g.params_mut()) {
            *p += scale * *d;
        }
    }
}

/// `[(1 − σ(a_raw))·v_backbone ; σ(a_raw)·v_topo]`
pub fn fuse(v_backbone: &[f64], v_topo: &[f64], a_raw: f64) -> Vec<f64> {
    let alpha = sigmoid(a_raw);
    v_backbone
        .iter()
        .map(|v| (1.0 - alpha) * v)
        .chain(v_topo.iter().map(|v| alpha * v))
        .collect()
}

/// `relu(W_red · v_topo + b_red)`
pub fn reduce(v_topo: &[f64], w_red: &Matrix, b_red: &[f64]) -> Result<Vec<f64>> {
    if b_red.len() != w_red.rows {
        return Err(Error::DimensionMismatch {
            expected: format!("bias of length {}", w_red.rows),
            actual: format!("length {}", b_red.len()),
        });
    }
    Ok(w_red.matvec(v_topo)?.iter().zip(b_red).map(|(a, b)| (a + b).max(0.0)).collect())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

struct Pass {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    fused: Vec<f64>,
    probs: Vec<f64>,
}

fn pass(head: &FusionHead, v_backbone: &[f64], v_topo: &[f64]) -> Result<Pass> {
    if v_backbone.len() != head.backbone_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("backbone vector of length {}", head.backbone_dim()),
            actual: format!("length {}", v_backbone.len()),
        });
    }
    let pre: Vec<f64> = head.w_red.matvec(v_topo)?.iter().zip(&head.b_red).map(|(a, b)| a + b).collect();
    let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
    let fused = fuse(v_backbone, &hidden, head.a_raw);
    let logits: Vec<f64> = head.w_cls.matvec(&fused)?.iter().zip(&head.b_cls).map(|(a, b)| a + b).collect();
    Ok(Pass { pre, hidden, fused, probs: softmax(&logits) })
}

/// Class probabilities.
pub fn forward(head: &FusionHead, v_backbone: &[f64], v_topo: &[f64]) -> Result<Vec<f64>> {
    Ok(pass(head, v_backbone, v_topo)?.probs)
}

pub fn predict(head: &FusionHead, v_backbone: &[f64], v_topo: &[f64]) -> Result<usize> {
    let p = forward(head, v_backbone, v_topo)?;
    Ok(p.iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > p[best] { i } else { best }))
}

fn check_labels(head: &FusionHead, batch: &[FusionSample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if let Some(s) = batch.iter().find(|s| s.label >= head.classes()) {
        return Err(Error::InvalidConfig(format!("label {} outside 0..{}", s.label, head.classes())));
    }
    Ok(())
}

/// Mean cross-entropy over the batch.
pub fn loss(head: &FusionHead, batch: &[FusionSample]) -> Result<f64> {
    check_labels(head, batch)?;
    let mut total = 0.0;
    for s in batch {
        let p = pass(head, &s.backbone, &s.topo)?.probs;
        total -= p[s.label].max(f64::MIN_POSITIVE).ln();
    }
    Ok(total / batch.len() as f64)
}

/// Mean cross-entropy loss and its gradient with respect to every parameter.
pub fn backward(head: &FusionHead, batch: &[FusionSample]) -> Result<(f64, FusionHead)> {
    check_labels(head, batch)?;
    let n = batch.len() as f64;
    let alpha = head.alpha();
    let db = head.backbone_dim();
    let mut grad = head.zeros_like();
    let mut total = 0.0;
    for s in batch {
        let Pass { pre, hidden, fused, probs } = pass(head, &s.backbone, &s.topo)?;
        total -= probs[s.label].max(f64::MIN_POSITIVE).ln();
        let dlogits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (p - if k == s.label { 1.0 } else { 0.0 }) / n)
            .collect();
        let mut dfused = vec![0.0; fused.len()];
        for (k, &dl) in dlogits.iter().enumerate() {
            grad.b_cls[k] += dl;
            let row = head.w_cls.row(k);
            let grow = &mut grad.w_cls.values[k * fused.len()..(k + 1) * fused.len()];
            for j in 0..fused.len() {
                grow[j] += dl * fused[j];
                dfused[j] += dl * row[j];
            }
        }
        let (d_back, d_hid) = dfused.split_at(db);
        let dalpha = -dot(d_back, &s.backbone) + dot(d_hid, &hidden);
        grad.a_raw += dalpha * alpha * (1.0 - alpha);
        let cols = head.topo_dim();
        for (i, (&dh, &z)) in d_hid.iter().zip(&pre).enumerate() {
            if z <= 0.0 {
                continue;
            }
            let dpre = alpha * dh;
            grad.b_red[i] += dpre;
            for (g, &x) in grad.w_red.values[i * cols..(i + 1) * cols].iter_mut().zip(&s.topo) {
                *g += dpre * x;
            }
        }
    }
    Ok((total / n, grad))
}

/// Largest relative error between analytic and central-difference gradients
/// over the five parameter blocks.
pub fn gradient_check(head: &FusionHead, batch: &[FusionSample], step: f64) -> Result<f64> {
    let (_, analytic) = backward(head, batch)?;
    let mut numeric = head.zeros_like();
    let count = numeric.params_mut().count();
    for idx in 0..count {
        let mut plus = head.clone();
        *plus.params_mut().nth(idx).expect("index in range") += step;
        let mut minus = head.clone();
        *minus.params_mut().nth(idx).expect("index in range") -= step;
        let d = (loss(&plus, batch)? - loss(&minus, batch)?) / (2.0 * step);
        *numeric.params_mut().nth(idx).expect("index in range") = d;
    }
    let blocks = |h: &FusionHead| -> [Vec<f64>; 5] {
        [vec![h.a_raw], h.w_red.values.clone(), h.b_red.clone(), h.w_cls.values.clone(), h.b_cls.clone()]
    };
    let worst = blocks(&analytic)
        .iter()
        .zip(blocks(&numeric).iter())
        .map(|(a, f)| {
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = a.iter().zip(f).map(|(x, y)| x - y).collect();
            norm(&diff) / norm(a).max(norm(f)).max(1e-6)
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub reduced_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, epochs: 200, batch_size: 16, seed: 0, reduced_dim: 512 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be finite and nonnegative".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.reduced_dim == 0 {
            return Err(Error::InvalidConfig("epochs, batch size and reduced dim must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub alpha: f64,
}

pub fn trace_to_csv(trace: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,loss,accuracy,alpha\n");
    for r in trace {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.loss, r.accuracy, r.alpha));
    }
    out
}

/// Trained head plus the topological-feature normalizer fitted on the
/// training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub head: FusionHead,
    pub topo_scaler: MinMax,
}

impl FusionModel {
    pub fn normalize(&self, samples: &[FusionSample]) -> Result<Vec<FusionSample>> {
        samples
            .iter()
            .map(|s| {
                Ok(FusionSample { backbone: s.backbone.clone(), topo: self.topo_scaler.transform(&s.topo)?, label: s.label })
            })
            .collect()
    }

    pub fn predict(&self, backbone: &[f64], topo: &[f64]) -> Result<usize> {
        predict(&self.head, backbone, &self.topo_scaler.transform(topo)?)
    }

    pub fn accuracy(&self, samples: &[FusionSample]) -> Result<f64> {
        accuracy(&self.head, &self.normalize(samples)?)
    }
}

/// Fraction of samples whose argmax class matches the label.
pub fn accuracy(head: &FusionHead, samples: &[FusionSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let mut hits = 0usize;
    for s in samples {
        hits += (predict(head, &s.backbone, &s.topo)? == s.label) as usize;
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Mini-batch gradient descent. Topological features are max-min normalized
/// with statistics from `data`. Each trace entry is measured on `data` after
/// the epoch's updates.
pub fn train(head: FusionHead, data: &[FusionSample], cfg: &TrainConfig) -> Result<(FusionModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    head.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let topo: Vec<Vec<f64>> = data.iter().map(|s| s.topo.clone()).collect();
    let topo_scaler = MinMax::fit(&topo)?;
    let mut model = FusionModel { head, topo_scaler };
    let normalized = model.normalize(data)?;
    check_labels(&model.head, &normalized)?;
    let mut order: Vec<usize> = (0..normalized.len()).collect();
    let mut r = rng(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut r);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<FusionSample> = chunk.iter().map(|&i| normalized[i].clone()).collect();
            let (_, grad) = backward(&model.head, &batch)?;
            if cfg.learning_rate > 0.0 {
                model.head.axpy(-cfg.learning_rate, &grad);
            }
        }
        trace.push(EpochRecord {
            epoch,
            loss: loss(&model.head, &normalized)?,
            accuracy: accuracy(&model.head, &normalized)?,
            alpha: model.head.alpha(),
        });
    }
    Ok((model, trace))
}
