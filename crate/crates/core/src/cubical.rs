//! Binary images as cubical complexes.
//!
//! A white pixel is a closed unit square together with its edges and
//! vertices, so two white pixels touching only at a corner are connected:
//! white components use 8-connectivity and, dually, black regions use
//! 4-connectivity. Betti numbers computed here are the reference the
//! persistence engine is checked against.

use std::collections::{HashSet, VecDeque};

use crate::image_io::GrayImage;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty dimensions {width}x{height}")));
        }
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", bits.len()),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        assert!(width > 0 && height > 0, "empty binary image");
        Self { width, height, bits: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "empty binary image");
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// Parses rows of `0`/`1` characters (whitespace and commas ignored).
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let parsed: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .filter(|c| !c.is_whitespace() && *c != ',')
                    .map(|c| match c {
                        '1' => Ok(true),
                        '0' => Ok(false),
                        other => Err(Error::Parse(format!("unexpected {other:?} in binary row"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let height = parsed.len();
        let width = parsed.first().map_or(0, Vec::len);
        if parsed.iter().any(|r| r.len() != width) {
            return Err(Error::Parse("ragged binary rows".into()));
        }
        Self::new(width, height, parsed.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Surrounds the image with a one-pixel frame of the given color.
    pub fn framed(&self, value: bool) -> BinaryImage {
        BinaryImage::from_fn(self.width + 2, self.height + 2, |x, y| {
            if x == 0 || y == 0 || x == self.width + 1 || y == self.height + 1 {
                value
            } else {
                self.get(x - 1, y - 1)
            }
        })
    }

    pub fn transpose(&self) -> BinaryImage {
        BinaryImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn rotate180(&self) -> BinaryImage {
        BinaryImage::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, self.height - 1 - y)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(isize, isize); 8] =
            [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    White,
    Black,
}

/// Per-pixel component labels; 0 is background, components are `1..=count`
/// numbered in row-major order of their first pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: usize,
}

impl ComponentLabeling {
    /// Pixel indices of each component, indexed by `label - 1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (i, &l) in self.labels.iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].push(i);
            }
        }
        out
    }
}

/// Sublevel set `{ value <= t }`.
pub fn threshold(img: &GrayImage, t: i64) -> Result<BinaryImage> {
    if !(0..=255).contains(&t) {
        return Err(Error::ThresholdOutOfRange(t));
    }
    let t = t as f64;
    Ok(BinaryImage {
        width: img.width(),
        height: img.height(),
        bits: img.values().iter().map(|&v| v <= t).collect(),
    })
}

pub fn label_components(img: &BinaryImage, conn: Connectivity, target: Target) -> ComponentLabeling {
    let (w, h) = (img.width, img.height);
    let want = target == Target::White;
    let mut labels = vec![0u32; w * h];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if img.bits[start] != want || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if img.bits[j] == want && labels[j] == 0 {
                    labels[j] = count;
                    queue.push_back(j);
                }
            }
        }
    }
    ComponentLabeling { width: w, height: h, labels, count: count as usize }
}

/// `(β₀, β₁)` of the cubical complex formed by the white pixels.
pub fn betti(img: &BinaryImage) -> (usize, usize) {
    let b0 = label_components(img, Connectivity::Eight, Target::White).count;
    let black = label_components(img, Connectivity::Four, Target::Black);
    let (w, h) = (img.width, img.height);
    let mut touches_border = vec![false; black.count + 1];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                touches_border[black.labels[y * w + x] as usize] = true;
            }
        }
    }
    let b1 = (1..=black.count).filter(|&l| !touches_border[l]).count();
    (b0, b1)
}

/// `V − E + F` of the cubical complex of white pixels, counted cell by cell.
pub fn euler_characteristic(img: &BinaryImage) -> i64 {
    let mut vertices = HashSet::new();
    let mut edges = HashSet::new();
    let mut faces = 0i64;
    for y in 0..img.height {
        for x in 0..img.width {
            if !img.get(x, y) {
                continue;
            }
            faces += 1;
            // vertices on the (w+1)x(h+1) lattice; edges keyed by lower-left vertex and orientation
            for (vx, vy) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
                vertices.insert((vx, vy));
            }
            edges.insert((x, y, 0u8));
            edges.insert((x, y + 1, 0u8));
            edges.insert((x, y, 1u8));
            edges.insert((x + 1, y, 1u8));
        }
    }
    vertices.len() as i64 - edges.len() as i64 + faces
}
