//! Persistence curves sampled on the threshold grid `t = 0..=254`.
//!
//! A curve is `t ↦ T({ψ(D; b, d, t) : b ≤ t < d})` for a point function `ψ`
//! vanishing on the diagonal and a statistic `T` of the resulting multiset
//! (with `T(∅) = 0`). The Betti curve takes `ψ ≡ 1`, `T = sum`; the entropy
//! curve takes `ψ = -((d-b)/L) ln((d-b)/L)` with `L` the total persistence of
//! the whole diagram.

use crate::image_io::{rgb_to_xyz, GrayImage, RgbImage};
use crate::persistence::{sublevel_persistence, PersistenceDiagram};
use crate::stats::{entropy_term, total_persistence};

/// Number of samples per curve.
pub const CURVE_LEN: usize = 255;

#[derive(Clone, Debug, PartialEq)]
pub struct CurveVector(pub Vec<f64>);

impl CurveVector {
    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    /// CSV with header `t,value` and one row per grid threshold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.0.iter().enumerate() {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Statistic applied to the multiset of alive-point values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    Sum,
    Mean,
    Max,
}

impl Statistic {
    pub fn apply(self, values: &[f64]) -> f64 {
        if values.is_empty() {
            return 0.0;
        }
        match self {
            Statistic::Sum => values.iter().sum(),
            Statistic::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Statistic::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// General persistence curve. `psi` receives the diagram, birth, death
/// (essential deaths as 256) and the threshold.
pub fn persistence_curve<F>(d: &PersistenceDiagram, psi: F, stat: Statistic) -> CurveVector
where
    F: Fn(&PersistenceDiagram, f64, f64, u32) -> f64,
{
    let mut alive = Vec::with_capacity(d.len());
    let samples = (0..CURVE_LEN as u32)
        .map(|t| {
            alive.clear();
            alive.extend(
                d.points()
                    .iter()
                    .filter(|p| p.alive_at(t))
                    .map(|p| psi(d, p.birth as f64, p.death_value() as f64, t)),
            );
            stat.apply(&alive)
        })
        .collect();
    CurveVector(samples)
}

pub fn betti_curve(d: &PersistenceDiagram) -> CurveVector {
    persistence_curve(d, |_, _, _, _| 1.0, Statistic::Sum)
}

pub fn entropy_curve(d: &PersistenceDiagram) -> CurveVector {
    let total = total_persistence(d);
    if total <= 0.0 {
        return CurveVector(vec![0.0; CURVE_LEN]);
    }
    persistence_curve(d, move |_, b, dd, _| entropy_term((dd - b) / total), Statistic::Sum)
}

/// Which curve to compute on a diagram pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Betti0,
    Betti1,
    Entropy0,
    Entropy1,
}

impl CurveKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "betti0" => Some(Self::Betti0),
            "betti1" => Some(Self::Betti1),
            "entropy0" => Some(Self::Entropy0),
            "entropy1" => Some(Self::Entropy1),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Betti0 => "betti0",
            Self::Betti1 => "betti1",
            Self::Entropy0 => "entropy0",
            Self::Entropy1 => "entropy1",
        }
    }

    pub fn compute(self, p0: &PersistenceDiagram, p1: &PersistenceDiagram) -> CurveVector {
        match self {
            Self::Betti0 => betti_curve(p0),
            Self::Betti1 => betti_curve(p1),
            Self::Entropy0 => entropy_curve(p0),
            Self::Entropy1 => entropy_curve(p1),
        }
    }
}

pub fn channel_curve(channel: &GrayImage, kind: CurveKind) -> CurveVector {
    let (p0, p1) = sublevel_persistence(channel);
    kind.compute(&p0, &p1)
}

/// 1530 values: β₀ then β₁ for each of R, G, B.
pub fn pc_rgb(img: &RgbImage) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * CURVE_LEN);
    for ch in img.rgb_channels() {
        let (p0, p1) = sublevel_persistence(&ch);
        out.extend(betti_curve(&p0).0);
        out.extend(betti_curve(&p1).0);
    }
    out
}

/// 1020 values on the X channel: β₀, β₁, E₀, E₁.
pub fn pc_xyz(img: &RgbImage) -> Vec<f64> {
    let (x, _, _) = rgb_to_xyz(img);
    let (p0, p1) = sublevel_persistence(&x);
    let mut out = Vec::with_capacity(4 * CURVE_LEN);
    out.extend(betti_curve(&p0).0);
    out.extend(betti_curve(&p1).0);
    out.extend(entropy_curve(&p0).0);
    out.extend(entropy_curve(&p1).0);
    out
}
