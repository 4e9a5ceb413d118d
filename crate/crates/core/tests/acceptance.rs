//! Acceptance checks. Each criterion prints one PASS/FAIL line with the
//! measured values and its runtime; the test fails if any line fails.

mod common;

use common::chunking::{boundary_oracle, grounding_oracle, random_stream};
use common::cka::cka_suite;
use common::gradcheck::{max_relative_error, random_instance as grad_instance};
use common::pipeline::{e2e_data, e2e_run, feature_fixture_check};
use common::tracking::{
    hota_oracle, idf1_oracle, permute_pred_ids, random_instance as tracking_instance,
};
use playclass::assignment::{hungarian, Objective};
use playclass::chunking::{
    plan_boundaries, pole_of_inaccessibility, score_grounding, PlannerConfig,
};
use playclass::dataset::BinaryMask;
use playclass::loco::{evaluate, run_loco, ConfusionMatrix, RunSpec};
use playclass::model::{TrainConfig, Variant};
use playclass::tracking::{hota, idf1, Detection, KeyFrame, VideoInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn check(name: &'static str, limit_secs: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_secs);
    Outcome {
        name,
        pass: pass && elapsed < limit,
        detail,
        elapsed,
        limit,
    }
}

fn published_confusion_consistency() -> (bool, String) {
    let m = ConfusionMatrix::from_row_percentages(
        &[
            vec![93.5, 4.8, 1.7],
            vec![31.2, 66.1, 2.7],
            vec![8.5, 6.7, 84.8],
        ],
        &[12585, 1345, 585],
    )
    .unwrap();
    let r = evaluate(&[m]).unwrap();
    let f1: Vec<f64> = r.per_class.iter().map(|c| 100.0 * c.f1).collect();
    let prec: Vec<f64> = r.per_class.iter().map(|c| 100.0 * c.precision).collect();
    let close = |got: &[f64], want: [f64; 3], tol: f64| {
        got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
    };
    let macro_pct = 100.0 * r.macro_f1;
    let pass = close(&f1, [94.8, 61.9, 74.4], 0.3)
        && close(&prec, [96.2, 58.2, 66.2], 0.3)
        && (macro_pct - 77.0).abs() <= 0.2;
    (
        pass,
        format!("f1 {f1:.2?} precision {prec:.2?} macro-F1 {macro_pct:.2}"),
    )
}

fn gradient_correctness() -> (bool, String) {
    let mut worst = Vec::new();
    for variant in [Variant::Mlp, Variant::Cnn, Variant::Hybrid] {
        let max = (0..4)
            .map(|seed| max_relative_error(&grad_instance(variant, seed)).0)
            .fold(0.0, f64::max);
        worst.push((variant, max));
    }
    let pass = worst.iter().all(|&(_, e)| e < 1e-4);
    let shown: Vec<String> = worst
        .iter()
        .map(|(v, e)| format!("{v:?} {e:.2e}"))
        .collect();
    (pass, format!("max relative error {}", shown.join(", ")))
}

fn tracking_scores(frames: &[KeyFrame]) -> (f64, Vec<f64>, f64) {
    let inst = VideoInstance::new("v", frames.to_vec());
    let h = hota(&inst);
    (h.hota, h.hota_alpha, idf1(&inst, 0.5).idf1)
}

fn tracking_oracles() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 150;
    let mut worst: f64 = 0.0;
    let mut perfect_ok = true;
    let mut permutation_ok = true;
    for _ in 0..cases {
        let frames = tracking_instance(&mut rng);
        let (h, per_alpha, i) = tracking_scores(&frames);
        let (oh, o_alpha) = hota_oracle(&frames);
        worst = worst
            .max((h - oh).abs())
            .max((i - idf1_oracle(&frames, 0.5)).abs());
        for (a, b) in per_alpha.iter().zip(&o_alpha) {
            worst = worst.max((a - b).abs());
        }
        permutation_ok &=
            tracking_scores(&permute_pred_ids(&frames, &mut rng)) == (h, per_alpha, i);
        if frames.iter().any(|f| !f.gt.is_empty()) {
            let perfect: Vec<KeyFrame> = frames
                .iter()
                .map(|f| KeyFrame {
                    pred: f
                        .gt
                        .iter()
                        .map(|d| Detection {
                            id: d.id + 40,
                            ..d.clone()
                        })
                        .collect(),
                    ..f.clone()
                })
                .collect();
            let (ph, _, pi) = tracking_scores(&perfect);
            perfect_ok &= ph == 1.0 && pi == 1.0;
        }
    }
    (
        worst <= 1e-9 && perfect_ok && permutation_ok,
        format!("{cases} instances, max deviation {worst:.1e}, perfect = 1: {perfect_ok}, id permutation invariant: {permutation_ok}"),
    )
}

fn best_permutation_total(matrix: &[Vec<f64>], objective: Objective) -> f64 {
    let (n, m) = (matrix.len(), matrix[0].len());
    let better = |a: f64, b: f64| match objective {
        Objective::Maximize => a > b,
        Objective::Minimize => a < b,
    };
    // Every injection of the shorter side into the longer one.
    fn walk(
        i: usize,
        used: &mut Vec<bool>,
        acc: f64,
        cost: &dyn Fn(usize, usize) -> f64,
        rows: usize,
        out: &mut Vec<f64>,
    ) {
        if i == rows {
            out.push(acc);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                walk(i + 1, used, acc + cost(i, j), cost, rows, out);
                used[j] = false;
            }
        }
    }
    let mut totals = Vec::new();
    if n <= m {
        walk(
            0,
            &mut vec![false; m],
            0.0,
            &|i, j| matrix[i][j],
            n,
            &mut totals,
        );
    } else {
        walk(
            0,
            &mut vec![false; n],
            0.0,
            &|i, j| matrix[j][i],
            m,
            &mut totals,
        );
    }
    totals
        .into_iter()
        .reduce(|a, b| if better(b, a) { b } else { a })
        .unwrap()
}

fn hungarian_optimality() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cases = 1200;
    let mut worst: f64 = 0.0;
    let mut shapes = BTreeSet::new();
    for case in 0..cases {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        shapes.insert((n, m));
        let objective = if case % 2 == 0 {
            Objective::Minimize
        } else {
            Objective::Maximize
        };
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if case % 5 == 0 {
                            rng.gen_range(0..4) as f64
                        } else {
                            rng.gen_range(-10.0..10.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let got = hungarian(&matrix, objective);
        let want = best_permutation_total(&matrix, objective);
        let pairs_ok = got.pairs.len() == n.min(m);
        let err = if pairs_ok {
            (got.total - want).abs()
        } else {
            f64::INFINITY
        };
        worst = worst.max(err);
    }
    (
        worst <= 1e-9,
        format!(
            "{cases} matrices over {} shapes up to 6x6, max |total - exhaustive| {worst:.1e}",
            shapes.len()
        ),
    )
}

fn feature_pipeline() -> (bool, String) {
    let c = feature_fixture_check();
    let square_ok =
        ((c.square_circularity - std::f64::consts::FRAC_PI_4) / std::f64::consts::FRAC_PI_4).abs()
            <= 0.01;
    let disc_ok = (c.disc_circularity - 1.0).abs() <= 0.05;
    let pass = c.frames == 22_500
        && c.windows_per_bird.len() == 3
        && c.windows_per_bird.values().all(|&w| w == 180)
        && c.all_vectors_171
        && square_ok
        && disc_ok
        && c.translation_bitwise;
    (
        pass,
        format!(
            "{} frames, windows per bird {:?}, 171-dim: {}, square circularity {:.4}, disc circularity {:.4}, translation bitwise: {}",
            c.frames, c.windows_per_bird, c.all_vectors_171, c.square_circularity, c.disc_circularity, c.translation_bitwise
        ),
    )
}

fn end_to_end() -> (bool, String) {
    let (data, run) = e2e_run(3);
    let guard = run.folds.iter().all(|f| f.fold.assert_disjoint().is_ok());
    let tested: BTreeSet<u32> = run.folds.iter().map(|f| f.fold.test_cage).collect();
    let covered = run.report.confusion.total() as usize == data.windows.len();
    let f1 = run.report.macro_f1;
    (
        f1 >= 0.90 && run.folds.len() == 5 && tested.len() == 5 && guard && covered,
        format!("macro-F1 {f1:.4} over {} folds, disjoint cages: {guard}, every window scored once: {covered}", run.folds.len()),
    )
}

fn random_blobs(rng: &mut impl Rng) -> BinaryMask {
    let (w, h) = (rng.gen_range(10..60), rng.gen_range(10..60));
    let blobs: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
        .map(|_| {
            (
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(0.5..12.0),
            )
        })
        .collect();
    BinaryMask::from_fn(w, h, |x, y| {
        blobs
            .iter()
            .any(|&(cx, cy, r)| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
    })
}

fn chunk_planner() -> (bool, String) {
    let cfg = PlannerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let streams = 50;
    let mut mismatches = 0;
    for _ in 0..streams {
        let frame_count = rng.gen_range(1600..7000);
        let s = random_stream(&mut rng, frame_count);
        let got: Vec<(u32, bool)> = plan_boundaries(&s, frame_count, &cfg)
            .unwrap()
            .iter()
            .map(|b| (b.frame, b.warning))
            .collect();
        if got != boundary_oracle(&s, frame_count, &cfg)
            || score_grounding(&s, &cfg).ok() != grounding_oracle(&s, &cfg)
        {
            mismatches += 1;
        }
    }
    let masks = 500;
    let mut outside = 0;
    for _ in 0..masks {
        let m = random_blobs(&mut rng);
        match pole_of_inaccessibility(&m.encode()) {
            Some((x, y)) if m.get(x as usize, y as usize) => {}
            None if m.area() == 0 => {}
            _ => outside += 1,
        }
    }
    (
        mismatches == 0 && outside == 0,
        format!("{mismatches}/{streams} streams differ from exhaustive search, {outside}/{masks} prompts outside their mask"),
    )
}

fn cka() -> (bool, String) {
    let d = cka_suite(100, 11);
    (
        d.cases == 100 && d.self_similarity < 1e-8 && d.invariance < 1e-8 && d.symmetry < 1e-12,
        format!(
            "{} pairs, |self - 1| {:.1e}, invariance {:.1e}, symmetry {:.1e}",
            d.cases, d.self_similarity, d.invariance, d.symmetry
        ),
    )
}

fn determinism() -> (bool, String) {
    let data = e2e_data(5);
    let spec = RunSpec {
        train: TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        },
        ..RunSpec::default()
    }
    .with_seed(17);
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        run_loco(&data, &spec).unwrap().write(&out).unwrap();
        bytes.push(std::fs::read(out.join("report.json")).unwrap());
    }
    let same = bytes[0] == bytes[1];
    (
        same,
        format!(
            "report.json identical across two runs ({} bytes): {same}",
            bytes[0].len()
        ),
    )
}

#[test]
fn acceptance() {
    let outcomes = vec![
        check(
            "published confusion consistency",
            1,
            published_confusion_consistency,
        ),
        check("gradient correctness", 30, gradient_correctness),
        check("tracking metric oracles", 60, tracking_oracles),
        check("hungarian optimality", 30, hungarian_optimality),
        check("feature pipeline", 60, feature_pipeline),
        check("end-to-end LOCO learning", 300, end_to_end),
        check("chunk planner", 30, chunk_planner),
        check("CKA suite", 10, cka),
        check("determinism", 300, determinism),
    ];
    for o in &outcomes {
        println!(
            "{} {}: {} [{:.2}s, limit {}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            o.elapsed.as_secs_f64(),
            o.limit.as_secs()
        );
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.name)
        .collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
