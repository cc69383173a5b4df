use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use topofeat::curves::{channel_curve, CurveKind};
use topofeat::features::{FeatureSchema, FeatureSet, FeatureTable};
use topofeat::image_io::{apply_mask, encode_mask_pgm, load_image, load_mask, named_channel};
use topofeat::segmentation::{iou, segment, Segmentation};
use topofeat::selftest::{self, SelfTestConfig};

use crate::config::RunConfig;
use crate::run::{list_images, sibling, stem, write_file, write_json, Failure, Recorder};

#[derive(Serialize)]
struct SegmentReport<'a> {
    image: String,
    width: usize,
    height: usize,
    mask_file: String,
    mask_area: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    iou: Option<f64>,
    segmentation: &'a Segmentation,
}

struct Segmented {
    mask_bytes: Vec<u8>,
    report: String,
}

fn segment_one(path: &Path, reference: Option<&Path>, cfg: &RunConfig) -> Result<Segmented> {
    let img = load_image(path)?;
    let seg = segment(&img, &cfg.segmentation)?;
    let name = stem(path);
    let iou = match reference {
        Some(dir) => {
            let truth = load_mask(dir.join(format!("{name}.pgm")))?;
            Some(iou(&seg.mask, &truth)?)
        }
        None => None,
    };
    let report = SegmentReport {
        image: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        width: img.width(),
        height: img.height(),
        mask_file: format!("{name}.pgm"),
        mask_area: seg.mask.count_ones(),
        iou,
        segmentation: &seg,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    Ok(Segmented { mask_bytes: encode_mask_pgm(&seg.mask), report: text })
}

/// Masks as `<stem>.pgm` and reports as `<stem>.json`, plus `manifest.json`.
pub fn segment_dir(input: &Path, output: &Path, reference: Option<&Path>, cfg: &RunConfig) -> Result<(), Failure> {
    cfg.segmentation.validate()?;
    let images = list_images(input)?;
    if images.is_empty() {
        return Err(anyhow!("no images found in {}", input.display()).into());
    }
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let results: Vec<Result<Segmented>> = images.par_iter().map(|p| segment_one(p, reference, cfg)).collect();
    let mut rec = Recorder::new("segment", cfg);
    for (path, result) in images.iter().zip(results) {
        rec.input(path);
        match result {
            Ok(seg) => {
                let name = stem(path);
                let mask_path = output.join(format!("{name}.pgm"));
                let report_path = output.join(format!("{name}.json"));
                write_file(&mask_path, &seg.mask_bytes)?;
                write_file(&report_path, &seg.report)?;
                rec.output(&mask_path);
                rec.output(&report_path);
            }
            Err(e) => rec.error(path, &e),
        }
    }
    rec.finish(&output.join("manifest.json"))
}

fn features_one(path: &Path, masks: Option<&Path>, set: FeatureSet) -> Result<Vec<f64>> {
    let mut img = load_image(path)?;
    if let Some(dir) = masks {
        let mask_path = dir.join(format!("{}.pgm", stem(path)));
        if !mask_path.exists() {
            bail!("missing mask {}", mask_path.display());
        }
        img = apply_mask(&img, &load_mask(&mask_path)?)?;
    }
    Ok(set.extract(&img))
}

/// Feature CSV plus `<name>.schema.json` and `<name>.manifest.json`.
pub fn features_dir(input: &Path, masks: Option<&Path>, out: &Path, cfg: &RunConfig) -> Result<(), Failure> {
    let set = cfg.feature_set;
    let images = list_images(input)?;
    if images.is_empty() {
        return Err(anyhow!("no images found in {}", input.display()).into());
    }
    let results: Vec<Result<Vec<f64>>> = images.par_iter().map(|p| features_one(p, masks, set)).collect();
    let schema = FeatureSchema::new(set, masks.is_some());
    let mut table = FeatureTable { columns: schema.columns.clone(), ids: Vec::new(), rows: Vec::new() };
    let mut rec = Recorder::new("features", cfg);
    for (path, result) in images.iter().zip(results) {
        rec.input(path);
        match result {
            Ok(row) => {
                table.ids.push(stem(path));
                table.rows.push(row);
            }
            Err(e) => rec.error(path, &e),
        }
    }
    table.check_schema(&schema)?;
    write_file(out, table.to_csv())?;
    rec.output(out);
    let schema_path = sibling(out, "schema.json");
    write_json(&schema_path, &schema)?;
    rec.output(&schema_path);
    rec.manifest.notes = serde_json::json!({
        "feature_set": set.name(),
        "masked": masks.is_some(),
        "masks_dir": masks.map(|m| m.display().to_string()),
        "rows": table.rows.len(),
        "columns": table.columns.len(),
    });
    rec.finish(&sibling(out, "manifest.json"))
}

pub fn curve(image: &Path, channel: &str, kind: &str, out: Option<&Path>) -> Result<(), Failure> {
    let kind = CurveKind::parse(kind)
        .ok_or_else(|| anyhow!("invalid curve {kind:?}; expected betti0, betti1, entropy0 or entropy1"))?;
    let gray = named_channel(&load_image(image)?, channel)?;
    let csv = channel_curve(&gray, kind).to_csv();
    match out {
        Some(path) => write_file(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn selftest(seed: u64, images: usize, out: Option<&PathBuf>) -> Result<(), Failure> {
    let report = selftest::run(&SelfTestConfig { seed, images, ..SelfTestConfig::default() });
    let mut text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    text.push('\n');
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    if report.passed() {
        eprintln!("selftest: {} checks passed", report.checks);
        Ok(())
    } else {
        Err(Failure::Invariant(anyhow!(
            "{} of {} persistence/threshold checks disagree",
            report.violations.len(),
            report.checks
        )))
    }
}
