//! Persistence statistics: distributional summaries of a diagram.
//!
//! Each diagram becomes a 19-entry [`PsVector`]: eight statistics of the
//! midlife multiset `{(b+d)/2}`, the same eight of the normalized lifespans
//! `{(d-b)/L}`, then persistence entropy, total persistence `L` and the point
//! count. Essential classes use the death surrogate 256.
//!
//! Estimators: sample (n-1) standard deviation, skewness `m3/m2^1.5` and
//! Pearson (non-excess) kurtosis `m4/m2^2` from central moments, and
//! quantiles by linear interpolation between order statistics. Singletons
//! and constant samples report 0 for spread and shape; an empty diagram maps
//! to the zero vector.

use crate::image_io::{rgb_to_xyz, GrayImage, RgbImage};
use crate::persistence::{sublevel_persistence, PersistenceDiagram};

pub const PS_LEN: usize = 19;

/// Entry names of a [`PsVector`], in order.
pub const PS_FIELDS: [&str; PS_LEN] = [
    "midlife_mean",
    "midlife_std",
    "midlife_skewness",
    "midlife_kurtosis",
    "midlife_median",
    "midlife_p25",
    "midlife_p75",
    "midlife_iqr",
    "lifespan_mean",
    "lifespan_std",
    "lifespan_skewness",
    "lifespan_kurtosis",
    "lifespan_median",
    "lifespan_p25",
    "lifespan_p75",
    "lifespan_iqr",
    "entropy",
    "total_persistence",
    "count",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsVector(pub [f64; PS_LEN]);

impl PsVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        PS_FIELDS.iter().position(|&f| f == name).map(|i| self.0[i])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn total_persistence(p: &PersistenceDiagram) -> f64 {
    p.points().iter().map(|x| x.lifespan()).sum()
}

pub fn midlife_set(p: &PersistenceDiagram) -> Vec<f64> {
    p.points()
        .iter()
        .map(|x| (x.birth as f64 + x.death_value() as f64) / 2.0)
        .collect()
}

pub fn lifespan_set(p: &PersistenceDiagram) -> Vec<f64> {
    let total = total_persistence(p);
    if total <= 0.0 {
        return Vec::new();
    }
    p.points().iter().map(|x| x.lifespan() / total).collect()
}

/// Natural-log Shannon entropy of the normalized lifespans.
pub fn persistence_entropy(p: &PersistenceDiagram) -> f64 {
    lifespan_set(p).iter().map(|&q| entropy_term(q)).sum()
}

/// `-q ln q`, with the `q = 0` limit.
pub fn entropy_term(q: f64) -> f64 {
    if q > 0.0 {
        -q * q.ln()
    } else {
        0.0
    }
}

/// Linear interpolation between order statistics of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Mean, std, skewness, kurtosis, median, p25, p75, iqr.
pub fn describe(sample: &[f64]) -> [f64; 8] {
    let n = sample.len();
    if n == 0 {
        return [0.0; 8];
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let moment = |k: i32| sample.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / nf;
    let m2 = moment(2);
    let (std, skew, kurt) = if n < 2 || m2 <= 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        let std = (m2 * nf / (nf - 1.0)).sqrt();
        (std, moment(3) / m2.powf(1.5), moment(4) / (m2 * m2))
    };
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let p25 = quantile_sorted(&sorted, 0.25);
    let p75 = quantile_sorted(&sorted, 0.75);
    [mean, std, skew, kurt, quantile_sorted(&sorted, 0.5), p25, p75, p75 - p25]
}

pub fn ps_vector(p: &PersistenceDiagram) -> PsVector {
    let mut out = [0.0; PS_LEN];
    if p.is_empty() {
        return PsVector(out);
    }
    out[..8].copy_from_slice(&describe(&midlife_set(p)));
    out[8..16].copy_from_slice(&describe(&lifespan_set(p)));
    out[16] = persistence_entropy(p);
    out[17] = total_persistence(p);
    out[18] = p.len() as f64;
    PsVector(out)
}

/// PS of one channel: `P₀` block then `P₁` block (38 values).
pub fn ps_channel(channel: &GrayImage) -> Vec<f64> {
    let (p0, p1) = sublevel_persistence(channel);
    let mut out = Vec::with_capacity(2 * PS_LEN);
    out.extend_from_slice(ps_vector(&p0).as_slice());
    out.extend_from_slice(ps_vector(&p1).as_slice());
    out
}

/// 114 values: channels R, G, B × diagrams P₀, P₁ × 19 statistics.
pub fn ps_rgb(img: &RgbImage) -> Vec<f64> {
    img.rgb_channels().iter().flat_map(ps_channel).collect()
}

/// 114 values: channels X, Y, Z × diagrams P₀, P₁ × 19 statistics.
pub fn ps_xyz(img: &RgbImage) -> Vec<f64> {
    let (x, y, z) = rgb_to_xyz(img);
    [x, y, z].iter().flat_map(ps_channel).collect()
}
