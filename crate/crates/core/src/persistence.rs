//! Sublevel-set persistence of grayscale images in dimensions 0 and 1.
//!
//! Each pixel is a 2-cube entering the filtration at `⌈value⌉`; edges and
//! vertices enter with the earliest incident pixel. Dimension 0 is computed by
//! union-find over 8-connected pixels with the elder rule. Dimension 1 uses
//! duality: holes of the sublevel set are the bounded 4-connected components
//! of its complement, so running union-find on the complement in decreasing
//! order (with a virtual outside component that never dies) yields the
//! 1-dimensional pairs. [`sublevel_persistence_by_reduction`] computes the same
//! diagrams by column reduction of the full cubical boundary matrix over Z/2.

use std::cmp::Ordering;
use std::fmt;

use crate::cubical::Connectivity;
use crate::image_io::GrayImage;
use crate::{Error, Result};

/// Finite stand-in for an infinite death, one past the largest threshold.
pub const ESSENTIAL_DEATH: u32 = 256;

/// Largest diagram accepted by [`bottleneck_distance`].
pub const BOTTLENECK_MAX_POINTS: usize = 64;

pub fn essential_death_value() -> u32 {
    ESSENTIAL_DEATH
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Death {
    Finite(u32),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PersistencePoint {
    pub birth: u32,
    pub death: Death,
}

impl PersistencePoint {
    pub fn finite(birth: u32, death: u32) -> Self {
        Self { birth, death: Death::Finite(death) }
    }

    pub fn essential(birth: u32) -> Self {
        Self { birth, death: Death::Infinite }
    }

    pub fn is_essential(&self) -> bool {
        self.death == Death::Infinite
    }

    /// Death with `∞` replaced by [`ESSENTIAL_DEATH`].
    pub fn death_value(&self) -> u32 {
        match self.death {
            Death::Finite(d) => d,
            Death::Infinite => ESSENTIAL_DEATH,
        }
    }

    /// `b <= t < d`
    pub fn alive_at(&self, t: u32) -> bool {
        self.birth <= t && t < self.death_value()
    }

    pub fn lifespan(&self) -> f64 {
        self.death_value() as f64 - self.birth as f64
    }
}

impl fmt::Display for PersistencePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.death {
            Death::Finite(d) => write!(f, "({}, {})", self.birth, d),
            Death::Infinite => write!(f, "({}, inf)", self.birth),
        }
    }
}

/// Multiset of nontrivial (birth < death) pairs in one homology dimension,
/// kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PersistenceDiagram {
    dimension: u8,
    points: Vec<PersistencePoint>,
}

impl PersistenceDiagram {
    pub fn new(dimension: u8, mut points: Vec<PersistencePoint>) -> Result<Self> {
        if dimension > 1 {
            return Err(Error::InvalidConfig(format!("unsupported homology dimension {dimension}")));
        }
        for p in &points {
            let ok = p.birth <= 255
                && match p.death {
                    Death::Finite(d) => p.birth < d && d <= 255,
                    Death::Infinite => true,
                };
            if !ok {
                return Err(Error::InvalidConfig(format!("invalid persistence point {p}")));
            }
        }
        points.sort_unstable();
        Ok(Self { dimension, points })
    }

    pub fn empty(dimension: u8) -> Self {
        Self { dimension, points: Vec::new() }
    }

    pub fn dimension(&self) -> u8 {
        self.dimension
    }

    pub fn points(&self) -> &[PersistencePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points alive at threshold `t`.
    pub fn rank_at(&self, t: u32) -> usize {
        self.points.iter().filter(|p| p.alive_at(t)).count()
    }
}

/// Threshold at which a real-valued pixel enters the filtration.
fn entry_level(v: f64) -> u32 {
    (v.ceil().clamp(0.0, 255.0)) as u32
}

/// Pixel indices sorted by (entry level, row-major index).
fn filtration_order(levels: &[u32]) -> Vec<usize> {
    let mut buckets = vec![0usize; 257];
    for &l in levels {
        buckets[l as usize + 1] += 1;
    }
    for i in 1..buckets.len() {
        buckets[i] += buckets[i - 1];
    }
    let mut order = vec![0; levels.len()];
    for (i, &l) in levels.iter().enumerate() {
        order[buckets[l as usize]] = i;
        buckets[l as usize] += 1;
    }
    order
}

/// Union-find whose roots remember the position (in processing order) of
/// the component's oldest pixel.
struct ElderForest {
    parent: Vec<usize>,
    oldest: Vec<usize>,
}

impl ElderForest {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), oldest: vec![usize::MAX; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges two roots; returns the `oldest` rank of the component that dies.
    fn merge(&mut self, a: usize, b: usize) -> usize {
        let (elder, younger) = if self.oldest[a] <= self.oldest[b] { (a, b) } else { (b, a) };
        self.parent[younger] = elder;
        self.oldest[younger]
    }
}

fn neighbors(i: usize, w: usize, h: usize, conn: Connectivity) -> impl Iterator<Item = usize> {
    let (x, y) = ((i % w) as isize, (i / w) as isize);
    conn.offsets().iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x + dx, y + dy);
        (nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize)
            .then(|| ny as usize * w + nx as usize)
    })
}

/// `(P₀, P₁)` of the sublevel-set filtration.
pub fn sublevel_persistence(img: &GrayImage) -> (PersistenceDiagram, PersistenceDiagram) {
    let (w, h) = (img.width(), img.height());
    let levels: Vec<u32> = img.values().iter().map(|&v| entry_level(v)).collect();
    let order = filtration_order(&levels);
    (dim0_pairs(&levels, &order, w, h), dim1_pairs(&levels, &order, w, h))
}

fn dim0_pairs(levels: &[u32], order: &[usize], w: usize, h: usize) -> PersistenceDiagram {
    let n = levels.len();
    let mut forest = ElderForest::new(n);
    let mut active = vec![false; n];
    let mut points = Vec::new();
    for (rank, &p) in order.iter().enumerate() {
        active[p] = true;
        forest.oldest[p] = rank;
        let level = levels[p];
        for q in neighbors(p, w, h, Connectivity::Eight) {
            if !active[q] {
                continue;
            }
            let (a, b) = (forest.find(p), forest.find(q));
            if a == b {
                continue;
            }
            let dead = forest.merge(a, b);
            let birth = levels[order[dead]];
            if birth < level {
                points.push(PersistencePoint::finite(birth, level));
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).filter(|&i| forest.find(i) == i).collect();
    roots.sort_unstable_by_key(|&r| forest.oldest[r]);
    points.extend(roots.iter().map(|&r| PersistencePoint::essential(levels[order[forest.oldest[r]]])));
    PersistenceDiagram { dimension: 0, points: sorted(points) }
}

fn dim1_pairs(levels: &[u32], order: &[usize], w: usize, h: usize) -> PersistenceDiagram {
    let n = levels.len();
    let outside = n;
    let mut forest = ElderForest::new(n + 1);
    forest.oldest[outside] = 0;
    let mut active = vec![false; n];
    let mut points = Vec::new();
    // reverse filtration: black pixels appear from the brightest down
    for (k, &p) in order.iter().rev().enumerate() {
        active[p] = true;
        forest.oldest[p] = k + 1;
        let level = levels[p];
        let (x, y) = (p % w, p / w);
        let on_border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
        let adjacent = neighbors(p, w, h, Connectivity::Four).filter(|&q| active[q]);
        for q in on_border.then_some(outside).into_iter().chain(adjacent) {
            let (a, b) = (forest.find(p), forest.find(q));
            if a == b {
                continue;
            }
            let dead = forest.merge(a, b);
            // `dead - 1` indexes the reversed order
            let death = levels[order[n - dead]];
            if level < death {
                points.push(PersistencePoint::finite(level, death));
            }
        }
    }
    PersistenceDiagram { dimension: 1, points: sorted(points) }
}

fn sorted(mut v: Vec<PersistencePoint>) -> Vec<PersistencePoint> {
    v.sort_unstable();
    v
}

/// Same diagrams as [`sublevel_persistence`], by standard column reduction of
/// the boundary matrix of the cubical complex (pixels, their edges and
/// vertices) over Z/2. Quadratic in the worst case; meant for cross-checks on
/// small images.
pub fn sublevel_persistence_by_reduction(img: &GrayImage) -> (PersistenceDiagram, PersistenceDiagram) {
    let (w, h) = (img.width(), img.height());
    let levels: Vec<u32> = img.values().iter().map(|&v| entry_level(v)).collect();
    let levels = &levels;
    // cells on the (2w+1)x(2h+1) grid; pixel (x,y) sits at (2x+1, 2y+1)
    let (gw, gh) = (2 * w + 1, 2 * h + 1);
    let mut cells: Vec<(u32, u8, usize)> = Vec::with_capacity(gw * gh);
    for gy in 0..gh {
        for gx in 0..gw {
            let dim = (gx % 2 + gy % 2) as u8;
            let xs = incident_pixels(gx, w);
            let ys = incident_pixels(gy, h);
            let value = ys
                .flat_map(|cy| xs.clone().map(move |cx| levels[cy * w + cx]))
                .min()
                .expect("every cell touches a pixel");
            cells.push((value, dim, gy * gw + gx));
        }
    }
    cells.sort_unstable();
    let mut position = vec![0usize; gw * gh];
    for (i, &(_, _, g)) in cells.iter().enumerate() {
        position[g] = i;
    }
    let boundary = |g: usize| -> Vec<usize> {
        let (gx, gy) = (g % gw, g / gw);
        let mut faces = Vec::with_capacity(4);
        if gx % 2 == 1 {
            faces.push(position[g - 1]);
            faces.push(position[g + 1]);
        }
        if gy % 2 == 1 {
            faces.push(position[g - gw]);
            faces.push(position[g + gw]);
        }
        faces.sort_unstable();
        faces
    };
    let mut columns: Vec<Vec<usize>> = cells.iter().map(|&(_, _, g)| boundary(g)).collect();
    let mut pivot_owner: Vec<Option<usize>> = vec![None; cells.len()];
    let mut paired = vec![false; cells.len()];
    let mut diagrams = [Vec::new(), Vec::new()];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match pivot_owner[low] {
                Some(k) => {
                    let other = std::mem::take(&mut columns[k]);
                    columns[j] = symmetric_difference(&columns[j], &other);
                    columns[k] = other;
                }
                None => {
                    pivot_owner[low] = Some(j);
                    paired[low] = true;
                    paired[j] = true;
                    let (birth, dim, _) = cells[low];
                    let death = cells[j].0;
                    if birth < death {
                        diagrams[dim as usize].push(PersistencePoint::finite(birth, death));
                    }
                    break;
                }
            }
        }
    }
    for (i, &(value, dim, _)) in cells.iter().enumerate() {
        if !paired[i] && dim < 2 {
            diagrams[dim as usize].push(PersistencePoint::essential(value));
        }
    }
    let [d0, d1] = diagrams;
    (
        PersistenceDiagram { dimension: 0, points: sorted(d0) },
        PersistenceDiagram { dimension: 1, points: sorted(d1) },
    )
}

/// Pixels along one axis incident to grid coordinate `g`.
fn incident_pixels(g: usize, n: usize) -> std::ops::Range<usize> {
    if g % 2 == 1 {
        g / 2..g / 2 + 1
    } else {
        g.saturating_sub(2) / 2..(g / 2).min(n - 1) + 1
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn linf(p: &PersistencePoint, q: &PersistencePoint) -> f64 {
    let db = (p.birth as f64 - q.birth as f64).abs();
    let dd = (p.death_value() as f64 - q.death_value() as f64).abs();
    db.max(dd)
}

fn diagonal_cost(p: &PersistencePoint) -> f64 {
    p.lifespan() / 2.0
}

/// Exact bottleneck distance. Essential points only match essential points;
/// differing essential counts give `f64::INFINITY`.
pub fn bottleneck_distance(p: &PersistenceDiagram, q: &PersistenceDiagram) -> Result<f64> {
    for d in [p, q] {
        if d.len() > BOTTLENECK_MAX_POINTS {
            return Err(Error::DiagramTooLarge(d.len(), BOTTLENECK_MAX_POINTS));
        }
    }
    let (pe, pf): (Vec<_>, Vec<_>) = p.points.iter().copied().partition(|x| x.is_essential());
    let (qe, qf): (Vec<_>, Vec<_>) = q.points.iter().copied().partition(|x| x.is_essential());
    if pe.len() != qe.len() {
        return Ok(f64::INFINITY);
    }
    // sorted births pair optimally on the line
    let essential = pe
        .iter()
        .zip(&qe)
        .map(|(a, b)| (a.birth as f64 - b.birth as f64).abs())
        .fold(0.0, f64::max);

    let mut candidates = vec![0.0];
    candidates.extend(pf.iter().map(diagonal_cost));
    candidates.extend(qf.iter().map(diagonal_cost));
    for a in &pf {
        for b in &qf {
            candidates.push(linf(a, b));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // feasibility is monotone in delta
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_exists(&pf, &qf, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo].max(essential))
}

/// Bipartite graph: left = P ∪ diag(Q), right = Q ∪ diag(P).
fn perfect_matching_exists(p: &[PersistencePoint], q: &[PersistencePoint], delta: f64) -> bool {
    let (n, m) = (p.len(), q.len());
    let size = n + m;
    let adj: Vec<Vec<usize>> = (0..size)
        .map(|l| {
            let mut out = Vec::new();
            if l < n {
                out.extend((0..m).filter(|&j| linf(&p[l], &q[j]) <= delta));
                if diagonal_cost(&p[l]) <= delta {
                    out.push(m + l);
                }
            } else {
                let j = l - n;
                if diagonal_cost(&q[j]) <= delta {
                    out.push(j);
                }
                out.extend(m..m + n);
            }
            out
        })
        .collect();
    let mut matched_right: Vec<Option<usize>> = vec![None; size];
    for l in 0..size {
        let mut seen = vec![false; size];
        if !augment(l, &adj, &mut seen, &mut matched_right) {
            return false;
        }
    }
    true
}

fn augment(l: usize, adj: &[Vec<usize>], seen: &mut [bool], matched_right: &mut [Option<usize>]) -> bool {
    for &r in &adj[l] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if matched_right[r].is_none_or(|other| augment(other, adj, seen, matched_right)) {
            matched_right[r] = Some(l);
            return true;
        }
    }
    false
}

/// CSV with header `dim,birth,death`; essential deaths are written as `inf`.
pub fn diagrams_to_csv(diagrams: &[&PersistenceDiagram]) -> String {
    let mut out = String::from("dim,birth,death\n");
    for d in diagrams {
        for p in &d.points {
            match p.death {
                Death::Finite(x) => out.push_str(&format!("{},{},{}\n", d.dimension, p.birth, x)),
                Death::Infinite => out.push_str(&format!("{},{},inf\n", d.dimension, p.birth)),
            }
        }
    }
    out
}

/// Parses [`diagrams_to_csv`] output into `(P₀, P₁)`.
pub fn diagrams_from_csv(text: &str) -> Result<(PersistenceDiagram, PersistenceDiagram)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("dim,birth,death") {
        return Err(Error::Parse("expected header dim,birth,death".into()));
    }
    let mut pts = [Vec::new(), Vec::new()];
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("row {}: {line:?}", i + 2));
        let fields: Vec<&str> = line.trim().split(',').collect();
        let [dim, birth, death] = fields[..] else { return Err(bad()) };
        let dim: usize = dim.parse().map_err(|_| bad())?;
        let birth: u32 = birth.parse().map_err(|_| bad())?;
        let death = match death {
            "inf" => Death::Infinite,
            d => Death::Finite(d.parse().map_err(|_| bad())?),
        };
        pts.get_mut(dim).ok_or_else(bad)?.push(PersistencePoint { birth, death });
    }
    let [p0, p1] = pts;
    Ok((PersistenceDiagram::new(0, p0)?, PersistenceDiagram::new(1, p1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::{betti, threshold};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(w: usize, h: usize, v: &[f64]) -> GrayImage {
        GrayImage::new(w, h, v.to_vec()).unwrap()
    }

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, levels: u32) -> GrayImage {
        let step = 255 / (levels - 1);
        let v = (0..w * h).map(|_| (rng.gen_range(0..levels) * step) as f64).collect();
        GrayImage::new(w, h, v).unwrap()
    }

    #[test]
    fn constant_image() {
        let (p0, p1) = sublevel_persistence(&gray(4, 3, &[42.0; 12]));
        assert_eq!(p0.points(), &[PersistencePoint::essential(42)]);
        assert!(p1.is_empty());
    }

    #[test]
    fn ring_with_bright_center() {
        let img = gray(3, 3, &[1., 1., 1., 1., 7., 1., 1., 1., 1.]);
        let (p0, p1) = sublevel_persistence(&img);
        assert_eq!(p0.points(), &[PersistencePoint::essential(1)]);
        assert_eq!(p1.points(), &[PersistencePoint::finite(1, 7)]);
    }

    #[test]
    fn two_minima_merge() {
        let (p0, p1) = sublevel_persistence(&gray(3, 1, &[5., 9., 5.]));
        assert_eq!(p0.points(), &[PersistencePoint::finite(5, 9), PersistencePoint::essential(5)]);
        assert!(p1.is_empty());
    }

    #[test]
    fn real_values_enter_at_ceiling() {
        let (p0, _) = sublevel_persistence(&gray(3, 1, &[4.2, 8.5, 5.0]));
        assert_eq!(p0.points(), &[PersistencePoint::finite(5, 9), PersistencePoint::essential(5)]);
    }

    #[test]
    fn elder_rule_keeps_older() {
        // minima 3 and 10; the younger (10) dies at the saddle 20
        let (p0, _) = sublevel_persistence(&gray(5, 1, &[3., 20., 10., 30., 40.]));
        assert_eq!(p0.points(), &[PersistencePoint::essential(3), PersistencePoint::finite(10, 20)]);
    }

    #[test]
    fn diagonal_neighbors_connect() {
        let img = gray(2, 2, &[1., 9., 9., 1.]);
        let (p0, p1) = sublevel_persistence(&img);
        assert_eq!(p0.points(), &[PersistencePoint::essential(1)]);
        assert!(p1.is_empty());
    }

    #[test]
    fn fundamental_lemma_small_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let w = rng.gen_range(1..8);
            let h = rng.gen_range(1..8);
            let img = random_image(&mut rng, w, h, 6);
            let (p0, p1) = sublevel_persistence(&img);
            for t in 0..=255u32 {
                let (b0, b1) = betti(&threshold(&img, t as i64).unwrap());
                assert_eq!(p0.rank_at(t), b0, "dim 0 at t={t}");
                assert_eq!(p1.rank_at(t), b1, "dim 1 at t={t}");
            }
        }
    }

    #[test]
    fn reduction_agrees_with_union_find() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w = rng.gen_range(1..9);
            let h = rng.gen_range(1..9);
            let img = random_image(&mut rng, w, h, 8);
            assert_eq!(sublevel_persistence(&img), sublevel_persistence_by_reduction(&img));
        }
    }

    #[test]
    fn essential_surrogate() {
        assert_eq!(essential_death_value(), 256);
        let p = PersistencePoint::essential(100);
        assert_eq!(p.lifespan(), 156.0);
        assert!(p.alive_at(254) && p.alive_at(255));
        assert!(!p.alive_at(99));
    }

    #[test]
    fn diagram_rejects_trivial_pairs() {
        assert!(PersistenceDiagram::new(0, vec![PersistencePoint::finite(3, 3)]).is_err());
        assert!(PersistenceDiagram::new(1, vec![PersistencePoint::finite(3, 300)]).is_err());
        assert!(PersistenceDiagram::new(2, vec![]).is_err());
    }

    fn diag(points: &[(u32, Option<u32>)]) -> PersistenceDiagram {
        PersistenceDiagram::new(
            0,
            points
                .iter()
                .map(|&(b, d)| match d {
                    Some(d) => PersistencePoint::finite(b, d),
                    None => PersistencePoint::essential(b),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn bottleneck_examples() {
        let p = diag(&[(0, Some(4)), (3, Some(9)), (1, None)]);
        assert_eq!(bottleneck_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(bottleneck_distance(&diag(&[(0, Some(4))]), &diag(&[])).unwrap(), 2.0);
        assert_eq!(bottleneck_distance(&diag(&[(0, Some(4))]), &diag(&[(1, Some(4))])).unwrap(), 1.0);
        assert_eq!(bottleneck_distance(&diag(&[(0, None)]), &diag(&[(3, None)])).unwrap(), 3.0);
        assert!(bottleneck_distance(&diag(&[(0, None)]), &diag(&[])).unwrap().is_infinite());
    }

    #[test]
    fn bottleneck_size_limit() {
        let big = diag(&(0..65).map(|i| (i, Some(i + 2))).collect::<Vec<_>>());
        assert!(matches!(
            bottleneck_distance(&big, &diag(&[])),
            Err(Error::DiagramTooLarge(65, BOTTLENECK_MAX_POINTS))
        ));
    }

    /// Enumerates every bijection between P ∪ diag(Q) and Q ∪ diag(P).
    fn bottleneck_by_enumeration(p: &[PersistencePoint], q: &[PersistencePoint]) -> f64 {
        let (n, m) = (p.len(), q.len());
        let cost = |l: usize, r: usize| -> f64 {
            match (l < n, r < m) {
                (true, true) => linf(&p[l], &q[r]),
                (true, false) => {
                    if r - m == l {
                        diagonal_cost(&p[l])
                    } else {
                        f64::INFINITY
                    }
                }
                (false, true) => {
                    if l - n == r {
                        diagonal_cost(&q[r])
                    } else {
                        f64::INFINITY
                    }
                }
                (false, false) => 0.0,
            }
        };
        let mut perm: Vec<usize> = (0..n + m).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |perm| {
            let c = perm.iter().enumerate().map(|(l, &r)| cost(l, r)).fold(0.0, f64::max);
            best = best.min(c);
        });
        best
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn bottleneck_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mk = |rng: &mut ChaCha8Rng, k: usize| -> Vec<PersistencePoint> {
                (0..k)
                    .map(|_| {
                        let b = rng.gen_range(0..20);
                        PersistencePoint::finite(b, b + rng.gen_range(1..12))
                    })
                    .collect()
            };
            let (n, m) = (rng.gen_range(0..5), rng.gen_range(0..4));
            let p = mk(&mut rng, n);
            let q = mk(&mut rng, m);
            let expected = bottleneck_by_enumeration(&p, &q);
            let got = bottleneck_distance(
                &PersistenceDiagram::new(0, p).unwrap(),
                &PersistenceDiagram::new(0, q).unwrap(),
            )
            .unwrap();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn csv_format() {
        let (p0, p1) = sublevel_persistence(&gray(3, 3, &[1., 1., 1., 1., 7., 1., 1., 1., 1.]));
        let csv = diagrams_to_csv(&[&p0, &p1]);
        assert_eq!(csv, "dim,birth,death\n0,1,inf\n1,1,7\n");
        assert_eq!(diagrams_from_csv(&csv).unwrap(), (p0, p1));
        assert!(diagrams_from_csv("dim,birth\n").is_err());
        assert!(diagrams_from_csv("dim,birth,death\n2,1,3\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_image() -> impl Strategy<Value = GrayImage> {
            (1usize..7, 1usize..7).prop_flat_map(|(w, h)| {
                proptest::collection::vec(0u8..=255, w * h).prop_map(move |v| {
                    GrayImage::new(w, h, v.into_iter().map(f64::from).collect()).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn csv_roundtrip(img in small_image()) {
                let (p0, p1) = sublevel_persistence(&img);
                let back = diagrams_from_csv(&diagrams_to_csv(&[&p0, &p1])).unwrap();
                prop_assert_eq!(back, (p0, p1));
            }

            #[test]
            fn one_essential_class(img in small_image()) {
                let (p0, p1) = sublevel_persistence(&img);
                prop_assert_eq!(p0.points().iter().filter(|p| p.is_essential()).count(), 1);
                prop_assert!(p1.points().iter().all(|p| !p.is_essential()));
                prop_assert!(p0.len() + p1.len() <= img.values().len());
            }

            #[test]
            fn shift_translates_finite_points(img in small_image(), c in 0u32..40) {
                let vals: Vec<f64> = img.values().iter().map(|v| v.min(200.0)).collect();
                let img = GrayImage::new(img.width(), img.height(), vals).unwrap();
                let (p0, p1) = sublevel_persistence(&img);
                let (s0, s1) = sublevel_persistence(&img.shifted(c as f64));
                for (orig, moved) in [(p0, s0), (p1, s1)] {
                    let expect: Vec<PersistencePoint> = orig
                        .points()
                        .iter()
                        .map(|p| PersistencePoint {
                            birth: p.birth + c,
                            death: match p.death {
                                Death::Finite(d) => Death::Finite(d + c),
                                Death::Infinite => Death::Infinite,
                            },
                        })
                        .collect();
                    prop_assert_eq!(moved.points(), &expect[..]);
                }
            }
        }
    }
}
