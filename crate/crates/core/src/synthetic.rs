//! Seeded synthetic data: lesion-like images with ground-truth masks, random
//! gray images, Gaussian blobs, and paired backbone/topological feature sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cubical::BinaryImage;
use crate::image_io::{GrayImage, RgbImage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn center(w: usize, h: usize) -> (f64, f64) {
    ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0)
}

/// Centered disk of value `fg` on a flat `bg` background.
pub fn disk_image(w: usize, h: usize, radius: f64, fg: u8, bg: u8) -> (RgbImage, BinaryImage) {
    let (cx, cy) = center(w, h);
    let truth = BinaryImage::from_fn(w, h, |x, y| (x as f64 - cx).hypot(y as f64 - cy) <= radius);
    let vals: Vec<u8> = truth.bits().iter().map(|&b| if b { fg } else { bg }).collect();
    (RgbImage::from_gray_u8(w, h, &vals).expect("valid dimensions"), truth)
}

/// [`disk_image`] with a `fraction` of background pixels set to `fg`.
pub fn disk_with_salt(
    w: usize,
    h: usize,
    radius: f64,
    fg: u8,
    bg: u8,
    fraction: f64,
    seed: u64,
) -> (RgbImage, BinaryImage) {
    let (_, truth) = disk_image(w, h, radius, fg, bg);
    let mut r = rng(seed);
    let vals: Vec<u8> = truth
        .bits()
        .iter()
        .map(|&b| if b || r.gen_bool(fraction) { fg } else { bg })
        .collect();
    (RgbImage::from_gray_u8(w, h, &vals).expect("valid dimensions"), truth)
}

/// Dark rotated ellipse near the center on a Gaussian-noise background, with
/// a little colour variation between channels.
pub fn noisy_ellipse(w: usize, h: usize, seed: u64) -> (RgbImage, BinaryImage) {
    let mut r = rng(seed);
    let (cx, cy) = center(w, h);
    let scale = w.min(h) as f64 / 64.0;
    let ex = cx + r.gen_range(-4.0..4.0) * scale;
    let ey = cy + r.gen_range(-4.0..4.0) * scale;
    let a = r.gen_range(10.0..18.0) * scale;
    let b = r.gen_range(7.0..13.0) * scale;
    let theta: f64 = r.gen_range(0.0..std::f64::consts::PI);
    let (s, c) = theta.sin_cos();
    let truth = BinaryImage::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - ex, y as f64 - ey);
        let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    });
    let fg: f64 = r.gen_range(50.0..80.0);
    let bg: f64 = r.gen_range(170.0..200.0);
    let noise = Normal::new(0.0, 12.0).expect("valid sigma");
    let tint: [f64; 3] = [r.gen_range(-10.0..10.0), 0.0, r.gen_range(-10.0..10.0)];
    let pixels = truth
        .bits()
        .iter()
        .map(|&inside| {
            let base = if inside { fg } else { bg } + noise.sample(&mut r);
            let mut px = [0u8; 3];
            for (p, t) in px.iter_mut().zip(tint) {
                *p = (base + t).round().clamp(0.0, 255.0) as u8;
            }
            px
        })
        .collect();
    (RgbImage::new(w, h, pixels).expect("valid dimensions"), truth)
}

/// A dark square hugging the top-left corner and a smaller dark disk at the
/// center. Returns the image and the center disk.
pub fn corner_and_center(w: usize, h: usize) -> (RgbImage, BinaryImage) {
    let (cx, cy) = center(w, h);
    let side = w.min(h) / 5;
    let disk = BinaryImage::from_fn(w, h, |x, y| (x as f64 - cx).hypot(y as f64 - cy) <= side as f64 / 2.0);
    let vals: Vec<u8> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if x < side && y < side {
                30
            } else if disk.get(x, y) {
                60
            } else {
                200
            }
        })
        .collect();
    (RgbImage::from_gray_u8(w, h, &vals).expect("valid dimensions"), disk)
}

/// Uniform random image with `levels` evenly spaced gray values in `[0, 255]`.
pub fn random_gray(r: &mut impl Rng, w: usize, h: usize, levels: u32) -> GrayImage {
    assert!(levels >= 2, "need at least two gray levels");
    let step = 255.0 / (levels - 1) as f64;
    let values = (0..w * h).map(|_| (r.gen_range(0..levels) as f64 * step).round()).collect();
    GrayImage::new(w, h, values).expect("valid dimensions")
}

/// Perturbs every value by an integer in `[-eps, eps]`, clamped to `[0, 255]`.
pub fn perturb(r: &mut impl Rng, img: &GrayImage, eps: i32) -> GrayImage {
    let values = img
        .values()
        .iter()
        .map(|&v| (v + r.gen_range(-eps..=eps) as f64).clamp(0.0, 255.0))
        .collect();
    GrayImage::new(img.width(), img.height(), values).expect("same dimensions")
}

/// `k` isotropic Gaussian clusters in `dim` dimensions, centers on a scaled
/// simplex-like layout `separation` apart along distinct axes.
pub fn gaussian_blobs(
    k: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid sigma");
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|c| (0..dim).map(|d| if d == c % dim { separation * (1 + c / dim) as f64 } else { 0.0 }).collect())
        .collect();
    let mut xs = Vec::with_capacity(k * per_class);
    let mut ys = Vec::with_capacity(k * per_class);
    for _ in 0..per_class {
        for (c, mu) in centers.iter().enumerate() {
            xs.push(mu.iter().map(|m| m + noise.sample(&mut r)).collect());
            ys.push(c);
        }
    }
    (xs, ys)
}

/// Which half of a fused sample carries the class signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Informative {
    Topological,
    Backbone,
    Both,
    Neither,
}

/// One labeled sample for the fusion head.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionSample {
    pub backbone: Vec<f64>,
    pub topo: Vec<f64>,
    pub label: usize,
}

/// Stand-in for backbone features: class-conditional Gaussians whose means
/// differ by `separation` only on the informative half; the other half is
/// pure noise. Topological features are shifted to be nonnegative like real
/// PS/PC features.
pub fn fusion_dataset(
    n: usize,
    classes: usize,
    backbone_dim: usize,
    topo_dim: usize,
    informative: Informative,
    separation: f64,
    seed: u64,
) -> Vec<FusionSample> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid sigma");
    let topo_signal = matches!(informative, Informative::Topological | Informative::Both);
    let backbone_signal = matches!(informative, Informative::Backbone | Informative::Both);
    let mean = |class: usize, d: usize, on: bool| -> f64 {
        if on && d % classes == class {
            separation
        } else {
            0.0
        }
    };
    (0..n)
        .map(|i| {
            let label = i % classes;
            let backbone = (0..backbone_dim)
                .map(|d| mean(label, d, backbone_signal) + noise.sample(&mut r))
                .collect();
            let topo = (0..topo_dim)
                .map(|d| 5.0 + mean(label, d, topo_signal) + noise.sample(&mut r))
                .collect();
            FusionSample { backbone, topo, label }
        })
        .collect()
}

/// Class-conditional Gaussian vectors for given labels: `N(separation·e_k, I)`
/// with `k = label mod dim`. Used as a stand-in backbone when none is given.
pub fn class_conditional_features(labels: &[usize], dim: usize, separation: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid sigma");
    labels
        .iter()
        .map(|&l| {
            (0..dim)
                .map(|d| if dim > 0 && d == l % dim { separation } else { 0.0 } + noise.sample(&mut r))
                .collect()
        })
        .collect()
}
