//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function has a plain Rust counterpart returning
//! `Result<_, String>` so the logic can be tested natively.

use topofeat::curves::{channel_curve, CurveKind};
use topofeat::fusion::{train, FusionHead, TrainConfig};
use topofeat::image_io::{named_channel, RgbImage};
use topofeat::segmentation::{segment, SegmentationConfig, SegmentationStatus};
use topofeat::synthetic::{fusion_dataset, noisy_ellipse, Informative};
use wasm_bindgen::prelude::*;

fn rgba(img: &RgbImage) -> Vec<u8> {
    img.pixels().iter().flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

/// RGBA bytes of a seeded synthetic lesion.
#[wasm_bindgen]
pub fn synthetic_lesion(width: usize, height: usize, seed: u64) -> Vec<u8> {
    rgba(&noisy_ellipse(width.max(8), height.max(8), seed).0)
}

#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct SegmentView {
    mask: Vec<u8>,
    counts: Vec<u32>,
    chosen_step: usize,
    first_rise: usize,
    status: String,
}

#[wasm_bindgen]
impl SegmentView {
    /// One byte per pixel, 1 inside the lesion.
    pub fn mask(&self) -> Vec<u8> {
        self.mask.clone()
    }

    /// Component counts for steps 1..=steps.
    pub fn counts(&self) -> Vec<u32> {
        self.counts.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn chosen_step(&self) -> usize {
        self.chosen_step
    }

    #[wasm_bindgen(getter)]
    pub fn first_rise(&self) -> usize {
        self.first_rise
    }

    #[wasm_bindgen(getter)]
    pub fn status(&self) -> String {
        self.status.clone()
    }
}

pub fn segment_view(width: usize, height: usize, data: &[u8], steps: usize) -> Result<SegmentView, String> {
    let img = RgbImage::from_rgba(width, height, data).map_err(|e| e.to_string())?;
    let cfg = SegmentationConfig { steps, ..SegmentationConfig::default() };
    let seg = segment(&img, &cfg).map_err(|e| e.to_string())?;
    let status = match seg.status {
        SegmentationStatus::Ok => "ok",
        SegmentationStatus::Degenerate => "degenerate",
        SegmentationStatus::NoComponents => "no_components",
    };
    Ok(SegmentView {
        mask: seg.mask.bits().iter().map(|&b| b as u8).collect(),
        counts: seg.counts.iter().map(|&c| c as u32).collect(),
        chosen_step: seg.chosen_step,
        first_rise: seg.first_rise,
        status: status.into(),
    })
}

#[wasm_bindgen]
pub fn segment_rgba(width: usize, height: usize, data: &[u8], steps: usize) -> Result<SegmentView, JsError> {
    segment_view(width, height, data, steps).map_err(|e| JsError::new(&e))
}

pub fn curve_values(width: usize, height: usize, data: &[u8], channel: &str, curve: &str) -> Result<Vec<f64>, String> {
    let img = RgbImage::from_rgba(width, height, data).map_err(|e| e.to_string())?;
    let kind = CurveKind::parse(curve).ok_or_else(|| format!("unknown curve {curve:?}"))?;
    let gray = named_channel(&img, channel).map_err(|e| e.to_string())?;
    Ok(channel_curve(&gray, kind).0)
}

/// 255 samples of the chosen curve on the chosen channel.
#[wasm_bindgen]
pub fn curve_rgba(width: usize, height: usize, data: &[u8], channel: &str, curve: &str) -> Result<Vec<f64>, JsError> {
    curve_values(width, height, data, channel, curve).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct FusionTrace {
    alpha: Vec<f64>,
    accuracy: Vec<f64>,
    loss: Vec<f64>,
}

#[wasm_bindgen]
impl FusionTrace {
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha.clone()
    }

    pub fn accuracy(&self) -> Vec<f64> {
        self.accuracy.clone()
    }

    pub fn loss(&self) -> Vec<f64> {
        self.loss.clone()
    }
}

pub fn fusion_trace_values(informative: &str, epochs: usize, seed: u64) -> Result<FusionTrace, String> {
    let informative = match informative {
        "topological" => Informative::Topological,
        "backbone" => Informative::Backbone,
        "both" => Informative::Both,
        "neither" => Informative::Neither,
        other => return Err(format!("unknown setting {other:?}")),
    };
    let data = fusion_dataset(200, 2, 8, 8, informative, 2.0, seed);
    let cfg = TrainConfig { learning_rate: 0.05, epochs: epochs.clamp(1, 500), batch_size: 16, seed, reduced_dim: 16 };
    let (_, trace) = train(FusionHead::init(8, 8, 16, 2, seed), &data, &cfg).map_err(|e| e.to_string())?;
    Ok(FusionTrace {
        alpha: trace.iter().map(|r| r.alpha).collect(),
        accuracy: trace.iter().map(|r| r.accuracy).collect(),
        loss: trace.iter().map(|r| r.loss).collect(),
    })
}

/// Trains a small fusion head on synthetic data where `informative` is
/// `topological`, `backbone`, `both` or `neither`.
#[wasm_bindgen]
pub fn fusion_trace(informative: &str, epochs: usize, seed: u64) -> Result<FusionTrace, JsError> {
    fusion_trace_values(informative, epochs, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_synthetic_lesion() {
        let data = synthetic_lesion(48, 40, 3);
        assert_eq!(data.len(), 48 * 40 * 4);
        let view = segment_view(48, 40, &data, 50).unwrap();
        assert_eq!(view.mask().len(), 48 * 40);
        assert_eq!(view.counts().len(), 50);
        assert_eq!(view.status(), "ok");
        assert!(view.mask().contains(&1));
        assert!(segment_view(48, 40, &data[..10], 50).is_err());
    }

    #[test]
    fn curves() {
        let data = synthetic_lesion(16, 16, 1);
        assert_eq!(curve_values(16, 16, &data, "X", "entropy1").unwrap().len(), 255);
        assert!(curve_values(16, 16, &data, "Q", "betti0").is_err());
        assert!(curve_values(16, 16, &data, "R", "betti9").is_err());
    }

    #[test]
    fn fusion_traces() {
        let t = fusion_trace_values("topological", 20, 2).unwrap();
        assert_eq!(t.alpha().len(), 20);
        assert!(t.alpha().iter().all(|&a| a > 0.0 && a < 1.0));
        assert!(fusion_trace_values("sideways", 5, 0).is_err());
    }
}
