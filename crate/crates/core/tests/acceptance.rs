//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use topofeat::cubical::{betti, threshold, BinaryImage};
use topofeat::features::FeatureSet;
use topofeat::fusion::{gradient_check, sigmoid, train, FusionHead, FusionSample, TrainConfig, INITIAL_A_RAW};
use topofeat::image_io::{apply_mask, RgbImage};
use topofeat::persistence::{bottleneck_distance, sublevel_persistence};
use topofeat::segmentation::{iou, segment, SegmentationConfig};
use topofeat::selftest::{self, SelfTestConfig};
use topofeat::svm::{balanced_accuracy, train_ovo, SvmConfig, SvmModel};
use topofeat::synthetic::{
    disk_image, fusion_dataset, gaussian_blobs, noisy_ellipse, perturb, random_gray, rng, Informative,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn lemma_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut mismatches = 0usize;
    let mut checks = 0usize;
    for _ in 0..200 {
        let img = random_gray(&mut r, 12, 12, 16);
        let (p0, p1) = sublevel_persistence(&img);
        for t in 0..=254u32 {
            let (b0, b1) = betti(&threshold(&img, t as i64).unwrap());
            for (d, b) in [(&p0, b0), (&p1, b1)] {
                checks += 1;
                let alive = d.points().iter().filter(|p| p.birth <= t && t < p.death_value()).count();
                mismatches += (alive != b) as usize;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 10.0,
        format!("{checks} checks, {mismatches} mismatches, {secs:.2}s (target < 10s)"),
    )
}

fn fig3_fixture() -> Outcome {
    let fig = BinaryImage::from_rows(&[
        "000000000000",
        "011100011110",
        "010100010010",
        "011100011110",
        "000000000000",
        "011000000100",
        "011000001000",
        "000000000000",
    ])
    .unwrap();
    let plain = betti(&fig);
    let framed = betti(&fig.framed(true));
    outcome(plain == (4, 2) && framed == (5, 3), format!("betti {plain:?}, framed {framed:?}"))
}

fn stability() -> Outcome {
    let mut r = rng(77);
    let mut worst_ratio: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..50 {
        let img = random_gray(&mut r, 8, 8, 256);
        for eps in [1, 2] {
            let other = perturb(&mut r, &img, eps);
            let (a0, a1) = sublevel_persistence(&img);
            let (b0, b1) = sublevel_persistence(&other);
            for (p, q) in [(&a0, &b0), (&a1, &b1)] {
                match bottleneck_distance(p, q) {
                    Ok(d) => {
                        worst_ratio = worst_ratio.max(d / eps as f64);
                        failures += (d > eps as f64) as usize;
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    outcome(failures == 0, format!("200 comparisons, {failures} violations, max d/eps = {worst_ratio:.3}"))
}

fn dimensions() -> Outcome {
    let img = RgbImage::new(6, 5, (0..30u32).map(|i| [(i * 8) as u8, (255 - i * 5) as u8, ((i * 37) % 255) as u8]).collect()).unwrap();
    let expected = [
        (FeatureSet::PsRgb, 114),
        (FeatureSet::PsXyz, 114),
        (FeatureSet::PcRgb, 1530),
        (FeatureSet::PcXyz, 1020),
        (FeatureSet::All, 2778),
    ];
    let got: Vec<String> = expected
        .iter()
        .map(|(set, _)| format!("{}={}", set.name(), set.extract(&img).len()))
        .collect();
    let ok = expected.iter().all(|(set, n)| set.extract(&img).len() == *n && set.column_names().len() == *n);
    outcome(ok, got.join(" "))
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut r = rng(seed + 500);
        let (db, dt, red, k) = (r.gen_range(2..6), r.gen_range(2..6), r.gen_range(2..8), r.gen_range(2..5));
        let mut head = FusionHead::init(db, dt, red, k, seed);
        head.a_raw = r.gen_range(-2.0..2.0);
        head.b_red.iter_mut().for_each(|b| *b = r.gen_range(-0.2..0.5));
        head.b_cls.iter_mut().for_each(|b| *b = r.gen_range(-0.5..0.5));
        let batch: Vec<FusionSample> = (0..5)
            .map(|i| FusionSample {
                backbone: (0..db).map(|_| r.gen_range(-1.0..1.0)).collect(),
                topo: (0..dt).map(|_| r.gen_range(0.0..1.0)).collect(),
                label: i % k,
            })
            .collect();
        worst = worst.max(gradient_check(&head, &batch, 1e-5).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-4 && secs < 5.0, format!("20 instances, max relative error {worst:.2e}, {secs:.2}s"))
}

fn fusion_learning() -> Outcome {
    let run = |informative: Informative| {
        let data = fusion_dataset(400, 2, 16, 16, informative, 2.0, 31);
        let (train_set, test_set) = data.split_at(280);
        let cfg = TrainConfig { learning_rate: 0.05, epochs: 200, batch_size: 16, seed: 5, reduced_dim: 32 };
        let (model, trace) = train(FusionHead::init(16, 16, 32, 2, 5), train_set, &cfg).unwrap();
        (model.accuracy(test_set).unwrap(), trace.last().unwrap().alpha)
    };
    let (topo_acc, topo_alpha) = run(Informative::Topological);
    let (back_acc, back_alpha) = run(Informative::Backbone);
    let init = sigmoid(INITIAL_A_RAW);
    outcome(
        topo_acc >= 0.95 && topo_alpha > init && back_acc >= 0.95,
        format!(
            "topo-informative acc {topo_acc:.3} alpha {init:.4}->{topo_alpha:.4}; backbone-informative acc {back_acc:.3} alpha ->{back_alpha:.4}"
        ),
    )
}

fn segmentation() -> Outcome {
    let cfg = SegmentationConfig::default();
    let ious: Vec<f64> = (0..10)
        .map(|seed| {
            let (img, truth) = noisy_ellipse(64, 64, seed);
            iou(&segment(&img, &cfg).unwrap().mask, &truth).unwrap()
        })
        .collect();
    let good = ious.iter().filter(|&&v| v >= 0.8).count();
    let (disk, truth) = disk_image(64, 64, 14.0, 50, 200);
    let disk_iou = iou(&segment(&disk, &cfg).unwrap().mask, &truth).unwrap();
    let listed: Vec<String> = ious.iter().map(|v| format!("{v:.3}")).collect();
    outcome(
        good >= 9 && disk_iou >= 0.95,
        format!("{good}/10 ellipses >= 0.8 [{}], clean disk {disk_iou:.3}", listed.join(" ")),
    )
}

fn svm() -> Outcome {
    let (x, y) = gaussian_blobs(3, 60, 3, 6.0, 8);
    // blobs are interleaved by class, so a seeded shuffle gives a mixed split
    let mut order: Vec<usize> = (0..x.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng(8));
    let cut = (x.len() as f64 * 0.7).round() as usize;
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) { idx.iter().map(|&i| (x[i].clone(), y[i])).unzip() };
    let (xtr, ytr) = pick(&order[..cut]);
    let (xte, yte) = pick(&order[cut..]);
    let model = SvmModel::fit(&xtr, &ytr, 3, &SvmConfig { seed: 8, ..Default::default() }).unwrap();
    let preds: Vec<usize> = xte.iter().map(|r| model.predict(r).unwrap()).collect();
    let acc = balanced_accuracy(&preds, &yte).unwrap();
    let (x7, y7) = gaussian_blobs(7, 10, 7, 6.0, 9);
    let pairs = train_ovo(&x7, &y7, 7, &SvmConfig { epochs: 5, ..Default::default() }).unwrap().classifiers.len();
    outcome(acc >= 0.95 && pairs == 21, format!("3-class balanced accuracy {acc:.3}, 7-class classifiers {pairs}"))
}

fn batch_bits() -> Vec<u64> {
    let cfg = SegmentationConfig::default();
    let mut bits = Vec::new();
    for seed in 0..3 {
        let (img, _) = noisy_ellipse(48, 48, seed);
        let seg = segment(&img, &cfg).unwrap();
        bits.extend(seg.mask.bits().iter().map(|&b| b as u64));
        let masked = apply_mask(&img, &seg.mask).unwrap();
        bits.extend(FeatureSet::All.extract(&masked).iter().map(|v| v.to_bits()));
    }
    bits
}

fn determinism() -> Outcome {
    let cfg = SelfTestConfig { seed: 3, images: 50, ..Default::default() };
    let a = selftest::run(&cfg);
    let b = selftest::run(&cfg);
    let same_selftest = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap() && a.passed();
    let same_batch = batch_bits() == batch_bits();
    outcome(
        same_selftest && same_batch,
        format!("selftest identical: {same_selftest}, segment+features batch identical: {same_batch}"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 9] = [
        ("persistence ranks equal thresholded Betti numbers", lemma_oracle),
        ("figure fixture Betti numbers", fig3_fixture),
        ("bottleneck stability under sup-norm perturbation", stability),
        ("feature dimensions", dimensions),
        ("fusion gradient check", gradient_checks),
        ("fusion learning and topological rate", fusion_learning),
        ("segmentation IOU", segmentation),
        ("one-against-one SVM", svm),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name}: {}", i + 1, o.detail);
        failed += (!o.passed) as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
