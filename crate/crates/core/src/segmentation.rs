//! Training-free lesion segmentation by a life-interval filtration.
//!
//! The gray image is thresholded at the shrinking levels `a·(1 - t/T)`,
//! `t = 1..=T`, where `a` is the mean gray value, giving nested white sets
//! `S₁ ⊇ S₂ ⊇ … ⊇ S_T`. A pixel's life-span is the last step it stays white.
//! A working step `T'` is chosen from the first rise in the component count,
//! components of `S_{T'}` are ranked by a center-weighted life score, and the
//! mask is the filled convex hull of the above-average components.

use serde::{Deserialize, Serialize};

use crate::cubical::{label_components, BinaryImage, Connectivity, Target};
use crate::image_io::{rgb_to_gray, GrayImage, RgbImage};
use crate::{Error, Result};

pub type Mask = BinaryImage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Number of filtration steps `T`.
    pub steps: usize,
    pub divisor: usize,
    /// Components smaller than this fraction of the image area are dropped.
    pub tiny_fraction: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self { steps: 50, divisor: 4, tiny_fraction: 0.001 }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidConfig(format!("steps must be >= 2, got {}", self.steps)));
        }
        if self.divisor < 1 {
            return Err(Error::InvalidConfig("divisor must be >= 1".into()));
        }
        if !(0.0..=0.1).contains(&self.tiny_fraction) {
            return Err(Error::InvalidConfig(format!(
                "tiny_fraction must lie in [0, 0.1], got {}",
                self.tiny_fraction
            )));
        }
        Ok(())
    }
}

/// Per-pixel life-span in `0..=T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LifeMap {
    pub width: usize,
    pub height: usize,
    pub spans: Vec<u32>,
    pub steps: usize,
}

impl LifeMap {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.spans[y * self.width + x]
    }

    /// White set `S_t = { L >= t }`.
    pub fn set_at(&self, t: usize) -> BinaryImage {
        BinaryImage::new(self.width, self.height, self.spans.iter().map(|&l| l as usize >= t).collect())
            .expect("life map has valid dimensions")
    }
}

pub fn life_spans(gray: &GrayImage, cfg: &SegmentationConfig) -> LifeMap {
    let a = gray.mean();
    let steps = cfg.steps;
    let levels: Vec<f64> = (1..=steps).map(|t| a * (1.0 - t as f64 / steps as f64)).collect();
    let spans = gray
        .values()
        .iter()
        .map(|&v| levels.iter().take_while(|&&level| v <= level).count() as u32)
        .collect();
    LifeMap { width: gray.width(), height: gray.height(), spans, steps }
}

/// `counts[i]` is the component count of `S_{i+1}`. Returns `(T'', T')`.
pub fn select_threshold(counts: &[usize], divisor: usize) -> Result<(usize, usize)> {
    if counts.is_empty() {
        return Err(Error::Empty("component counts"));
    }
    if divisor == 0 {
        return Err(Error::InvalidConfig("divisor must be >= 1".into()));
    }
    let steps = counts.len();
    let t2 = (1..steps)
        .find(|&t| counts[t] > counts[t - 1])
        .unwrap_or(steps - 1);
    let t1 = (1 + t2 / divisor).min(steps.saturating_sub(1)).max(1);
    Ok((t2, t1))
}

fn pixel_xy(i: usize, width: usize) -> (f64, f64) {
    ((i % width) as f64, (i / width) as f64)
}

/// Distance from the nearest pixel of the component to the nearest image edge.
pub fn border_distance(pixels: &[usize], width: usize, height: usize) -> f64 {
    pixels
        .iter()
        .map(|&i| {
            let (x, y) = pixel_xy(i, width);
            x.min(y).min(width as f64 - 1.0 - x).min(height as f64 - 1.0 - y)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance from the nearest pixel of the component to the image midpoint.
pub fn center_distance(pixels: &[usize], width: usize, height: usize) -> f64 {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    pixels
        .iter()
        .map(|&i| {
            let (x, y) = pixel_xy(i, width);
            (x - cx).hypot(y - cy)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `(1 + d_border)³ · ΣL / (1 + d_center)³`
pub fn life_score_from_parts(life_sum: f64, d_border: f64, d_center: f64) -> f64 {
    (1.0 + d_border).powi(3) * life_sum / (1.0 + d_center).powi(3)
}

pub fn life_score(pixels: &[usize], life: &LifeMap) -> f64 {
    let sum: f64 = pixels.iter().map(|&i| life.spans[i] as f64).sum();
    life_score_from_parts(
        sum,
        border_distance(pixels, life.width, life.height),
        center_distance(pixels, life.width, life.height),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub area: usize,
    pub life_sum: u64,
    pub border_distance: f64,
    pub center_distance: f64,
    pub score: f64,
    pub kept: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationStatus {
    Ok,
    /// All pixels identical; the mask covers the whole image.
    Degenerate,
    /// No component survived the size filter; the mask is empty.
    NoComponents,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segmentation {
    #[serde(skip)]
    pub mask: Mask,
    pub status: SegmentationStatus,
    pub mean_gray: f64,
    /// Component counts of `S_1..=S_T`.
    pub counts: Vec<usize>,
    pub first_rise: usize,
    pub chosen_step: usize,
    pub components: Vec<ComponentReport>,
}

pub fn segment(img: &RgbImage, cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let gray = rgb_to_gray(img);
    segment_gray(&gray, cfg)
}

pub fn segment_gray(gray: &GrayImage, cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let (w, h) = (gray.width(), gray.height());
    let mean_gray = gray.mean();
    let first = gray.values()[0];
    if gray.values().iter().all(|&v| v == first) {
        return Ok(Segmentation {
            mask: BinaryImage::filled(w, h, true),
            status: SegmentationStatus::Degenerate,
            mean_gray,
            counts: Vec::new(),
            first_rise: 0,
            chosen_step: 0,
            components: Vec::new(),
        });
    }
    let life = life_spans(gray, cfg);
    let counts: Vec<usize> = (1..=cfg.steps)
        .map(|t| label_components(&life.set_at(t), Connectivity::Eight, Target::White).count)
        .collect();
    let (first_rise, chosen_step) = select_threshold(&counts, cfg.divisor)?;

    let labeling = label_components(&life.set_at(chosen_step), Connectivity::Eight, Target::White);
    let min_area = cfg.tiny_fraction * (w * h) as f64;
    let survivors: Vec<Vec<usize>> = labeling
        .members()
        .into_iter()
        .filter(|m| m.len() as f64 >= min_area)
        .collect();
    let mut components: Vec<ComponentReport> = survivors
        .iter()
        .map(|m| ComponentReport {
            area: m.len(),
            life_sum: m.iter().map(|&i| life.spans[i] as u64).sum(),
            border_distance: border_distance(m, w, h),
            center_distance: center_distance(m, w, h),
            score: life_score(m, &life),
            kept: false,
        })
        .collect();
    if components.is_empty() {
        return Ok(Segmentation {
            mask: BinaryImage::filled(w, h, false),
            status: SegmentationStatus::NoComponents,
            mean_gray,
            counts,
            first_rise,
            chosen_step,
            components,
        });
    }
    let mean_score = components.iter().map(|c| c.score).sum::<f64>() / components.len() as f64;
    for c in &mut components {
        c.kept = c.score > mean_score;
    }
    // equal scores leave nothing strictly above the mean
    if !components.iter().any(|c| c.kept) {
        components.iter_mut().for_each(|c| c.kept = true);
    }
    let points: Vec<(i64, i64)> = survivors
        .iter()
        .zip(&components)
        .filter(|(_, c)| c.kept)
        .flat_map(|(m, _)| m.iter().map(|&i| ((i % w) as i64, (i / w) as i64)))
        .collect();
    Ok(Segmentation {
        mask: fill_convex_hull(&convex_hull(points), w, h),
        status: SegmentationStatus::Ok,
        mean_gray,
        counts,
        first_rise,
        chosen_step,
        components,
    })
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise hull (monotone chain), collinear points dropped.
pub fn convex_hull(mut points: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    points.sort_unstable();
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * points.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(i64, i64)>> =
            if pass == 0 { Box::new(points.iter()) } else { Box::new(points.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Pixels whose centers lie inside or on the hull.
pub fn fill_convex_hull(hull: &[(i64, i64)], width: usize, height: usize) -> Mask {
    let mut mask = BinaryImage::filled(width, height, false);
    if hull.is_empty() {
        return mask;
    }
    let (min_x, max_x) = (hull.iter().map(|p| p.0).min().unwrap(), hull.iter().map(|p| p.0).max().unwrap());
    let (min_y, max_y) = (hull.iter().map(|p| p.1).min().unwrap(), hull.iter().map(|p| p.1).max().unwrap());
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let p = (x, y);
            let inside = match hull.len() {
                1 => p == hull[0],
                2 => cross(hull[0], hull[1], p) == 0,
                n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0),
            };
            if inside {
                mask.set(x as usize, y as usize, true);
            }
        }
    }
    mask
}

/// Intersection over union; two empty masks score 1.
pub fn iou(a: &Mask, b: &Mask) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a.width(), a.height()),
            actual: format!("{}x{}", b.width(), b.height()),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.bits().iter().zip(b.bits()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use approx::assert_relative_eq;

    #[test]
    fn life_span_examples() {
        let cfg = SegmentationConfig::default();
        // mean = 100; value 0 satisfies every step including t = T
        let gray = GrayImage::new(2, 1, vec![0.0, 200.0]).unwrap();
        let life = life_spans(&gray, &cfg);
        assert_eq!(life.spans, vec![50, 0]);
        // value just below the mean survives only while a(1 - t/T) stays above it
        let gray = GrayImage::new(2, 1, vec![90.0, 110.0]).unwrap();
        let life = life_spans(&gray, &cfg);
        // 90 <= 100(1 - t/50)  <=>  t <= 5
        assert_eq!(life.spans, vec![5, 0]);
        let zeros = GrayImage::new(3, 1, vec![0.0; 3]).unwrap();
        assert_eq!(life_spans(&zeros, &cfg).spans, vec![50; 3]);
    }

    #[test]
    fn boundary_value_is_white() {
        // 80 == 100 (1 - 10/50) exactly: white at t = 10
        let gray = GrayImage::new(2, 1, vec![80.0, 120.0]).unwrap();
        assert_eq!(life_spans(&gray, &SegmentationConfig::default()).spans[0], 10);
    }

    #[test]
    fn threshold_selection() {
        let mut counts = vec![5, 3, 2, 2, 4];
        counts.resize(50, 1);
        assert_eq!(select_threshold(&counts, 4).unwrap(), (4, 2));
        let decreasing: Vec<usize> = (0..50).rev().collect();
        assert_eq!(select_threshold(&decreasing, 4).unwrap(), (49, 13));
        let rising: Vec<usize> = (1..=50).collect();
        assert_eq!(select_threshold(&rising, 4).unwrap(), (1, 1));
        assert!(select_threshold(&[], 4).is_err());
        // clamp to T - 1
        assert_eq!(select_threshold(&[3, 2, 1], 1).unwrap(), (2, 2));
    }

    #[test]
    fn life_score_examples() {
        assert_relative_eq!(life_score_from_parts(12.0, 2.0, 10.0), 27.0 * 12.0 / 1331.0);
        assert_relative_eq!(life_score_from_parts(12.0, 2.0, 10.0), 0.24343, epsilon = 1e-5);
        assert_eq!(life_score_from_parts(5.0, 3.0, 0.0), 64.0 * 5.0);
        assert_eq!(life_score_from_parts(5.0, 0.0, 3.0), 5.0 / 64.0);
    }

    #[test]
    fn distances() {
        // 5x5, midpoint (2,2)
        let px = [2 * 5 + 2];
        assert_eq!(center_distance(&px, 5, 5), 0.0);
        assert_eq!(border_distance(&px, 5, 5), 2.0);
        let corner = [0usize, 1];
        assert_eq!(border_distance(&corner, 5, 5), 0.0);
        assert_relative_eq!(center_distance(&corner, 5, 5), (1.0f64 + 4.0).sqrt());
    }

    #[test]
    fn clean_disk() {
        let (img, truth) = synthetic::disk_image(64, 64, 12.0, 40, 200);
        let seg = segment(&img, &SegmentationConfig::default()).unwrap();
        assert_eq!(seg.status, SegmentationStatus::Ok);
        assert!(iou(&seg.mask, &truth).unwrap() >= 0.95);
    }

    #[test]
    fn salt_noise_is_removed() {
        let (img, truth) = synthetic::disk_with_salt(64, 64, 12.0, 40, 200, 0.05, 5);
        let seg = segment(&img, &SegmentationConfig::default()).unwrap();
        let score = iou(&seg.mask, &truth).unwrap();
        assert!(score >= 0.8, "iou {score}");
    }

    #[test]
    fn center_blob_beats_corner_blob() {
        let (img, center) = synthetic::corner_and_center(64, 64);
        let seg = segment(&img, &SegmentationConfig::default()).unwrap();
        assert_eq!(seg.components.iter().filter(|c| c.kept).count(), 1);
        let kept = seg.components.iter().find(|c| c.kept).unwrap();
        assert!(kept.center_distance < 2.0);
        assert!(iou(&seg.mask, &center).unwrap() > 0.9);
    }

    #[test]
    fn degenerate_image() {
        let img = RgbImage::new(4, 4, vec![[7, 7, 7]; 16]).unwrap();
        let seg = segment(&img, &SegmentationConfig::default()).unwrap();
        assert_eq!(seg.status, SegmentationStatus::Degenerate);
        assert_eq!(seg.mask.count_ones(), 16);
    }

    #[test]
    fn invalid_config() {
        let img = RgbImage::new(2, 2, vec![[0, 0, 0]; 4]).unwrap();
        for cfg in [
            SegmentationConfig { steps: 1, ..Default::default() },
            SegmentationConfig { divisor: 0, ..Default::default() },
            SegmentationConfig { tiny_fraction: 0.5, ..Default::default() },
        ] {
            assert!(matches!(segment(&img, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn iou_examples() {
        let a = BinaryImage::from_rows(&["1100", "0000"]).unwrap();
        let b = BinaryImage::from_rows(&["0011", "0000"]).unwrap();
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
        let e = BinaryImage::filled(4, 2, false);
        assert_eq!(iou(&e, &e).unwrap(), 1.0);
        // |A∩B| = 50, |A∪B| = 150 on a 20x10 grid
        let m1 = BinaryImage::from_fn(20, 10, |x, _| x < 10);
        let m2 = BinaryImage::from_fn(20, 10, |x, _| (5..15).contains(&x));
        assert_relative_eq!(iou(&m1, &m2).unwrap(), 1.0 / 3.0);
        assert!(iou(&a, &BinaryImage::filled(2, 4, false)).is_err());
    }

    #[test]
    fn hull_fill_shapes() {
        assert_eq!(fill_convex_hull(&convex_hull(vec![(1, 1)]), 3, 3).count_ones(), 1);
        let seg = fill_convex_hull(&convex_hull(vec![(0, 0), (2, 2), (1, 1)]), 3, 3);
        assert_eq!(seg.count_ones(), 3);
        let tri = fill_convex_hull(&convex_hull(vec![(0, 0), (4, 0), (0, 4)]), 5, 5);
        assert_eq!(tri.count_ones(), 15);
    }

    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn filtration_nested_and_antitone(vals in proptest::collection::vec(0u8..=255, 36)) {
                let gray = GrayImage::new(6, 6, vals.iter().map(|&v| v as f64).collect()).unwrap();
                let cfg = SegmentationConfig::default();
                let life = life_spans(&gray, &cfg);
                for t in 1..cfg.steps {
                    let (s, next) = (life.set_at(t), life.set_at(t + 1));
                    prop_assert!(next.bits().iter().zip(s.bits()).all(|(&n, &c)| !n || c));
                }
                for i in 0..36 {
                    for j in 0..36 {
                        if gray.values()[i] <= gray.values()[j] {
                            prop_assert!(life.spans[i] >= life.spans[j]);
                        }
                    }
                }
            }

            #[test]
            fn hull_mask_is_convex(pts in proptest::collection::vec((0i64..20, 0i64..20), 1..12)) {
                let mask = fill_convex_hull(&convex_hull(pts.clone()), 20, 20);
                for &p in &pts {
                    prop_assert!(mask.get(p.0 as usize, p.1 as usize));
                }
                let on: Vec<(i64, i64)> = (0..400).filter(|&i| mask.bits()[i]).map(|i| ((i % 20) as i64, (i / 20) as i64)).collect();
                for (k, &a) in on.iter().enumerate().step_by(3) {
                    for &b in on.iter().skip(k).step_by(5) {
                        let g = gcd(b.0 - a.0, b.1 - a.1).max(1);
                        let (sx, sy) = ((b.0 - a.0) / g, (b.1 - a.1) / g);
                        for s in 0..=g {
                            prop_assert!(mask.get((a.0 + s * sx) as usize, (a.1 + s * sy) as usize));
                        }
                    }
                }
            }

            #[test]
            fn iou_symmetric(a in proptest::collection::vec(any::<bool>(), 12), b in proptest::collection::vec(any::<bool>(), 12)) {
                let (ma, mb) = (BinaryImage::new(4, 3, a.clone()).unwrap(), BinaryImage::new(4, 3, b.clone()).unwrap());
                let (x, y) = (iou(&ma, &mb).unwrap(), iou(&mb, &ma).unwrap());
                prop_assert_eq!(x, y);
                prop_assert!((0.0..=1.0).contains(&x));
                prop_assert_eq!(x == 1.0, a == b);
            }
        }
    }

    #[test]
    fn deterministic() {
        let (img, _) = synthetic::noisy_ellipse(64, 64, 3);
        let a = segment(&img, &SegmentationConfig::default()).unwrap();
        let b = segment(&img, &SegmentationConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mask, b.mask);
    }
}
