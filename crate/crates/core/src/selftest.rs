//! Built-in oracle suite: on seeded random images, the number of diagram
//! points alive at `t` must equal the Betti number of the thresholded image
//! for every `t` and both dimensions.

use serde::{Deserialize, Serialize};

use crate::cubical::{betti, threshold};
use crate::persistence::sublevel_persistence;
use crate::synthetic::{random_gray, rng};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfTestConfig {
    pub seed: u64,
    pub images: usize,
    pub size: usize,
    pub levels: u32,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        Self { seed: 0, images: 200, size: 12, levels: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub image: usize,
    pub t: u32,
    pub dimension: u8,
    pub from_diagram: usize,
    pub from_threshold: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub config: SelfTestConfig,
    pub checks: usize,
    pub violations: Vec<Violation>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn run(cfg: &SelfTestConfig) -> SelfTestReport {
    let mut r = rng(cfg.seed);
    let mut checks = 0;
    let mut violations = Vec::new();
    for image in 0..cfg.images {
        let img = random_gray(&mut r, cfg.size, cfg.size, cfg.levels);
        let (p0, p1) = sublevel_persistence(&img);
        for t in 0..=254u32 {
            let (b0, b1) = betti(&threshold(&img, t as i64).expect("t in range"));
            for (dimension, diagram, expected) in [(0u8, &p0, b0), (1, &p1, b1)] {
                checks += 1;
                let alive = diagram.rank_at(t);
                if alive != expected {
                    violations.push(Violation { image, t, dimension, from_diagram: alive, from_threshold: expected });
                }
            }
        }
    }
    SelfTestReport { config: cfg.clone(), checks, violations }
}
