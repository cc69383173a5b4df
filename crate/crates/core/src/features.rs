//! Named feature sets and their tabular (CSV + JSON schema) form.

use serde::{Deserialize, Serialize};

use crate::curves::{pc_rgb, pc_xyz, CURVE_LEN};
use crate::image_io::RgbImage;
use crate::stats::{ps_rgb, ps_xyz, PS_FIELDS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    PsRgb,
    PsXyz,
    PcRgb,
    PcXyz,
    /// ps-rgb, ps-xyz, pc-rgb, pc-xyz concatenated in that order.
    All,
}

impl FeatureSet {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ps-rgb" => Ok(Self::PsRgb),
            "ps-xyz" => Ok(Self::PsXyz),
            "pc-rgb" => Ok(Self::PcRgb),
            "pc-xyz" => Ok(Self::PcXyz),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidConfig(format!("unknown feature set {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PsRgb => "ps-rgb",
            Self::PsXyz => "ps-xyz",
            Self::PcRgb => "pc-rgb",
            Self::PcXyz => "pc-xyz",
            Self::All => "all",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Self::PsRgb | Self::PsXyz => 114,
            Self::PcRgb => 1530,
            Self::PcXyz => 1020,
            Self::All => 2778,
        }
    }

    fn parts(self) -> &'static [FeatureSet] {
        match self {
            Self::All => &[Self::PsRgb, Self::PsXyz, Self::PcRgb, Self::PcXyz],
            Self::PsRgb => &[Self::PsRgb],
            Self::PsXyz => &[Self::PsXyz],
            Self::PcRgb => &[Self::PcRgb],
            Self::PcXyz => &[Self::PcXyz],
        }
    }

    pub fn extract(self, img: &RgbImage) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dimension());
        for part in self.parts() {
            match part {
                Self::PsRgb => out.extend(ps_rgb(img)),
                Self::PsXyz => out.extend(ps_xyz(img)),
                Self::PcRgb => out.extend(pc_rgb(img)),
                Self::PcXyz => out.extend(pc_xyz(img)),
                Self::All => unreachable!(),
            }
        }
        out
    }

    /// Column names, e.g. `ps_rgb_R_dim0_midlife_mean`, `pc_xyz_X_entropy1_t042`.
    pub fn column_names(self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dimension());
        for part in self.parts() {
            match part {
                Self::PsRgb | Self::PsXyz => {
                    let (prefix, chans) = if *part == Self::PsRgb {
                        ("ps_rgb", ["R", "G", "B"])
                    } else {
                        ("ps_xyz", ["X", "Y", "Z"])
                    };
                    for ch in chans {
                        for dim in 0..2 {
                            for f in PS_FIELDS {
                                out.push(format!("{prefix}_{ch}_dim{dim}_{f}"));
                            }
                        }
                    }
                }
                Self::PcRgb => {
                    for ch in ["R", "G", "B"] {
                        for curve in ["betti0", "betti1"] {
                            out.extend((0..CURVE_LEN).map(|t| format!("pc_rgb_{ch}_{curve}_t{t:03}")));
                        }
                    }
                }
                Self::PcXyz => {
                    for curve in ["betti0", "betti1", "entropy0", "entropy1"] {
                        out.extend((0..CURVE_LEN).map(|t| format!("pc_xyz_X_{curve}_t{t:03}")));
                    }
                }
                Self::All => unreachable!(),
            }
        }
        out
    }
}

/// Schema sidecar written next to a feature CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_set: FeatureSet,
    pub id_column: String,
    pub columns: Vec<String>,
    pub masked: bool,
}

impl FeatureSchema {
    pub fn new(feature_set: FeatureSet, masked: bool) -> Self {
        Self {
            feature_set,
            id_column: "image_id".into(),
            columns: feature_set.column_names(),
            masked,
        }
    }
}

/// In-memory feature table: one row per image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    /// Values are written with Rust's shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Empty("feature csv"))?;
        let mut cols = header.split(',').map(|s| s.trim().to_string());
        if cols.next().as_deref() != Some("image_id") {
            return Err(Error::Parse("feature csv must start with an image_id column".into()));
        }
        let columns: Vec<String> = cols.collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or_default().trim().to_string();
            let row = fields
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {f:?}", i + 2))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != columns.len() {
                return Err(Error::Parse(format!(
                    "row {}: {} values for {} columns",
                    i + 2,
                    row.len(),
                    columns.len()
                )));
            }
            ids.push(id);
            rows.push(row);
        }
        Ok(Self { columns, ids, rows })
    }

    /// Checks columns against a schema sidecar.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        if self.columns != schema.columns {
            return Err(Error::DimensionMismatch {
                expected: format!("{} columns of {}", schema.columns.len(), schema.feature_set.name()),
                actual: format!("{} columns", self.columns.len()),
            });
        }
        Ok(())
    }
}
