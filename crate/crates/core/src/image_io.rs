//! Image loading, color-space conversion and masking.
//!
//! All filtrations in this crate run on [`GrayImage`] channels whose values
//! live in `[0, 255]`. Values are kept as `f64`; quantization onto the integer
//! threshold grid happens inside the persistence engine.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::cubical::BinaryImage;
use crate::{Error, Result};

/// sRGB (D65) to XYZ, applied to raw 0-255 channel values.
const XYZ_MATRIX: [[f64; 3]; 3] = [
    [0.4124, 0.3576, 0.1805],
    [0.2126, 0.7152, 0.0722],
    [0.0193, 0.1192, 0.9505],
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty dimensions {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        Ok(Self { width, height, pixels })
    }

    /// Gray image replicated into three identical channels.
    pub fn from_gray_u8(width: usize, height: usize, values: &[u8]) -> Result<Self> {
        Self::new(width, height, values.iter().map(|&v| [v, v, v]).collect())
    }

    /// Builds from interleaved RGBA bytes (as delivered by a browser canvas); alpha is dropped.
    pub fn from_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<Self> {
        if rgba.len() != width * height * 4 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} bytes", width * height * 4),
                actual: format!("{} bytes", rgba.len()),
            });
        }
        Self::new(width, height, rgba.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// One color channel (0 = R, 1 = G, 2 = B) as a gray image.
    pub fn channel(&self, c: usize) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|p| p[c] as f64).collect(),
        }
    }

    pub fn rgb_channels(&self) -> [GrayImage; 3] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty dimensions {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", width * height),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("value {v} outside [0,255]")));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn transpose(&self) -> GrayImage {
        let mut values = Vec::with_capacity(self.values.len());
        for x in 0..self.width {
            for y in 0..self.height {
                values.push(self.get(x, y));
            }
        }
        GrayImage { width: self.height, height: self.width, values }
    }

    /// Adds `c` to every value, clamping into `[0, 255]`.
    pub fn shifted(&self, c: f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| (v + c).clamp(0.0, 255.0)).collect(),
        }
    }
}

/// Loads a PNG, binary PGM/PPM (P5/P6) or CSV grid file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = String::from_utf8(bytes).map_err(|e| Error::CorruptData(e.to_string()))?;
        let (w, h, values) = parse_csv_grid(&text)?;
        return RgbImage::from_gray_u8(w, h, &values);
    }
    decode_image(&bytes)
}

/// Decodes PNG or binary PNM bytes, detected by magic number.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let format = if bytes.starts_with(b"\x89PNG") {
        image::ImageFormat::Png
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        image::ImageFormat::Pnm
    } else {
        let head: String = bytes.iter().take(4).map(|b| format!("{b:02x}")).collect();
        return Err(Error::UnsupportedFormat(format!("unrecognized header 0x{head}")));
    };
    let decoded = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::CorruptData(other.to_string()),
    })?;
    use image::DynamicImage as D;
    let rgb = match decoded {
        D::ImageLuma8(_) | D::ImageLumaA8(_) | D::ImageRgb8(_) | D::ImageRgba8(_) => decoded.to_rgb8(),
        other => {
            return Err(Error::UnsupportedFormat(format!("{:?} pixel layout", other.color())));
        }
    };
    let (w, h) = rgb.dimensions();
    RgbImage::new(
        w as usize,
        h as usize,
        rgb.pixels().map(|p| p.0).collect(),
    )
}

/// Parses rows of comma-separated integers in `[0, 255]`. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_csv_grid(text: &str) -> Result<(usize, usize, Vec<u8>)> {
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<u8>().map_err(|_| {
                    Error::CorruptData(format!("line {}: bad value {:?}", lineno + 1, s.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::CorruptData(format!(
                    "line {}: expected {w} columns, found {}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    match width {
        Some(w) if w > 0 => Ok((w, height, values)),
        _ => Err(Error::CorruptData("empty grid".into())),
    }
}

/// Channel average `(R + G + B) / 3`, unrounded.
pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        values: img
            .pixels
            .iter()
            .map(|p| (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0)
            .collect(),
    }
}

/// Linear XYZ of one pixel, before clamping.
pub fn xyz_unclamped(p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(XYZ_MATRIX.iter()) {
        *o = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
    }
    out
}

/// X, Y and Z channels, each clamped to `[0, 255]`. No gamma expansion.
pub fn rgb_to_xyz(img: &RgbImage) -> (GrayImage, GrayImage, GrayImage) {
    let n = img.pixels.len();
    let mut chans = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for p in &img.pixels {
        let xyz = xyz_unclamped([p[0] as f64, p[1] as f64, p[2] as f64]);
        for (c, v) in chans.iter_mut().zip(xyz) {
            c.push(v.clamp(0.0, 255.0));
        }
    }
    let [x, y, z] = chans;
    let mk = |values| GrayImage { width: img.width, height: img.height, values };
    (mk(x), mk(y), mk(z))
}

/// Channel by name: `R`, `G`, `B`, `X`, `Y`, `Z` (either case) or `gray`.
pub fn named_channel(img: &RgbImage, name: &str) -> Result<GrayImage> {
    match name {
        "R" | "r" => Ok(img.channel(0)),
        "G" | "g" => Ok(img.channel(1)),
        "B" | "b" => Ok(img.channel(2)),
        "X" | "x" => Ok(rgb_to_xyz(img).0),
        "Y" | "y" => Ok(rgb_to_xyz(img).1),
        "Z" | "z" => Ok(rgb_to_xyz(img).2),
        "gray" => Ok(rgb_to_gray(img)),
        other => Err(Error::InvalidConfig(format!(
            "invalid channel {other:?}; expected one of R, G, B, X, Y, Z, gray"
        ))),
    }
}

/// Paints every pixel outside the mask white.
pub fn apply_mask(img: &RgbImage, mask: &BinaryImage) -> Result<RgbImage> {
    if img.width != mask.width() || img.height != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", img.width, img.height),
            actual: format!("{}x{}", mask.width(), mask.height()),
        });
    }
    let pixels = img
        .pixels
        .iter()
        .zip(mask.bits())
        .map(|(&p, &keep)| if keep { p } else { [255; 3] })
        .collect();
    Ok(RgbImage { width: img.width, height: img.height, pixels })
}

/// Binary PGM (P5) with values {0, 255}.
pub fn encode_mask_pgm(mask: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

pub fn write_mask_pgm(mask: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_mask_pgm(mask))?;
    Ok(())
}

/// Reads a mask image; any nonzero gray value counts as foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let img = load_image(path)?;
    BinaryImage::new(
        img.width,
        img.height,
        img.pixels.iter().map(|p| p[0] != 0).collect(),
    )
}

/// Binary PPM (P6) encoding, used by tests and the CLI for synthetic fixtures.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn px(p: [u8; 3]) -> RgbImage {
        RgbImage::new(1, 1, vec![p]).unwrap()
    }

    #[test]
    fn decode_ppm_exact() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 255, 255, 255]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.pixels(), &[[0, 0, 0], [255, 255, 255]]);
    }

    #[test]
    fn decode_pgm_replicates_gray() {
        let mut bytes = b"P5\n1 1\n255\n".to_vec();
        bytes.push(128);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.pixels(), &[[128, 128, 128]]);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let mut bytes = b"P6\n4 4\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(decode_image(&bytes), Err(Error::CorruptData(_))));
    }

    #[test]
    fn load_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        assert!(matches!(load_image(&missing), Err(Error::MissingFile(_))));
        let junk = dir.path().join("junk.bmp");
        fs::write(&junk, b"BM\x00\x00garbage").unwrap();
        assert!(matches!(load_image(&junk), Err(Error::UnsupportedFormat(_))));
        let bad_png = dir.path().join("bad.png");
        fs::write(&bad_png, b"\x89PNG\r\n\x1a\nxx").unwrap();
        assert!(matches!(load_image(&bad_png), Err(Error::CorruptData(_))));
    }

    #[test]
    fn png_roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let buf = image::RgbImage::from_raw(2, 2, vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]).unwrap();
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.get(1, 1), [10, 11, 12]);
    }

    #[test]
    fn csv_grid() {
        let (w, h, v) = parse_csv_grid("# fixture\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(v, vec![1, 2, 3, 4, 5, 6]);
        assert!(parse_csv_grid("1,2\n3\n").is_err());
        assert!(parse_csv_grid("1,300\n").is_err());
        assert!(parse_csv_grid("").is_err());
    }

    #[test]
    fn channels_by_name() {
        let img = RgbImage::new(1, 1, vec![[30, 60, 90]]).unwrap();
        assert_eq!(named_channel(&img, "G").unwrap().values(), &[60.0]);
        assert_eq!(named_channel(&img, "gray").unwrap().values(), &[60.0]);
        assert_eq!(named_channel(&img, "y").unwrap(), rgb_to_xyz(&img).1);
        assert!(named_channel(&img, "H").is_err());
    }

    #[test]
    fn gray_average() {
        assert_eq!(rgb_to_gray(&px([30, 60, 90])).values(), &[60.0]);
        assert_eq!(rgb_to_gray(&px([0, 0, 0])).values(), &[0.0]);
        assert_eq!(rgb_to_gray(&px([255, 254, 253])).values(), &[254.0]);
        // no rounding
        assert_relative_eq!(rgb_to_gray(&px([1, 0, 0])).values()[0], 1.0 / 3.0);
    }

    #[test]
    fn xyz_values() {
        let (x, y, z) = rgb_to_xyz(&px([0, 0, 0]));
        assert_eq!((x.values()[0], y.values()[0], z.values()[0]), (0.0, 0.0, 0.0));

        let (x, y, z) = rgb_to_xyz(&px([255, 255, 255]));
        assert_relative_eq!(x.values()[0], 242.3775, epsilon = 1e-9);
        assert_relative_eq!(y.values()[0], 255.0, epsilon = 1e-9);
        assert_eq!(z.values()[0], 255.0);
        let raw = xyz_unclamped([255.0; 3]);
        assert_relative_eq!(raw[2], 277.695, epsilon = 1e-9);

        let (x, y, z) = rgb_to_xyz(&px([255, 0, 0]));
        assert_relative_eq!(x.values()[0], 105.162, epsilon = 1e-9);
        assert_relative_eq!(y.values()[0], 54.213, epsilon = 1e-9);
        assert_relative_eq!(z.values()[0], 4.9215, epsilon = 1e-9);
    }

    #[test]
    fn mask_application() {
        let img = RgbImage::new(2, 1, vec![[1, 2, 3], [4, 5, 6]]).unwrap();
        let all = BinaryImage::new(2, 1, vec![true, true]).unwrap();
        let none = BinaryImage::new(2, 1, vec![false, false]).unwrap();
        let mixed = BinaryImage::new(2, 1, vec![true, false]).unwrap();
        assert_eq!(apply_mask(&img, &all).unwrap(), img);
        assert_eq!(apply_mask(&img, &none).unwrap().pixels(), &[[255; 3], [255; 3]]);
        assert_eq!(apply_mask(&img, &mixed).unwrap().pixels(), &[[1, 2, 3], [255; 3]]);
        let wrong = BinaryImage::new(1, 2, vec![true, true]).unwrap();
        assert!(matches!(apply_mask(&img, &wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mask_pgm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = BinaryImage::new(3, 1, vec![true, false, true]).unwrap();
        write_mask_pgm(&mask, &path).unwrap();
        assert_eq!(&fs::read(&path).unwrap()[11..], &[255, 0, 255]);
        assert_eq!(load_mask(&path).unwrap(), mask);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(RgbImage::new(0, 1, vec![]).is_err());
        assert!(GrayImage::new(1, 1, vec![256.0]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gray_is_symmetric_and_bounded(r: u8, g: u8, b: u8) {
                let a = rgb_to_gray(&px([r, g, b])).values()[0];
                let c = rgb_to_gray(&px([b, r, g])).values()[0];
                prop_assert_eq!(a, c);
                prop_assert!((0.0..=255.0).contains(&a));
            }

            #[test]
            fn xyz_linear(r in 0.0f64..255.0, g in 0.0f64..255.0, b in 0.0f64..255.0, s in 0.0f64..1.0) {
                let full = xyz_unclamped([r, g, b]);
                let scaled = xyz_unclamped([s * r, s * g, s * b]);
                for k in 0..3 {
                    prop_assert!((scaled[k] - s * full[k]).abs() < 1e-9);
                }
            }

            #[test]
            fn mask_idempotent(bits in proptest::collection::vec(any::<bool>(), 6), vals in proptest::collection::vec(any::<u8>(), 6)) {
                let img = RgbImage::from_gray_u8(3, 2, &vals).unwrap();
                let mask = BinaryImage::new(3, 2, bits).unwrap();
                let once = apply_mask(&img, &mask).unwrap();
                prop_assert_eq!(apply_mask(&once, &mask).unwrap(), once);
            }
        }
    }
}
