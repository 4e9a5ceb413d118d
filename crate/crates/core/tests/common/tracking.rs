//! Random tracking instances and definition-level HOTA / IDF1 oracles.

use playclass::dataset::BBox;
use playclass::tracking::{Detection, KeyFrame, ALPHAS};
use rand::Rng;
use std::collections::BTreeMap;

pub fn random_instance(rng: &mut impl Rng) -> Vec<KeyFrame> {
    let n_tracks = rng.gen_range(1..=4);
    let n_frames = rng.gen_range(1..=12);
    let base: Vec<(f64, f64)> = (0..n_tracks)
        .map(|_| (rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)))
        .collect();
    // Prediction id per gt track, occasionally swapped per frame.
    let pred_ids: Vec<i64> = (0..n_tracks as i64).map(|i| 100 + i).collect();
    (0..n_frames)
        .map(|t| {
            let mut gt = Vec::new();
            let mut pred = Vec::new();
            let mut ids = pred_ids.clone();
            if n_tracks > 1 && rng.gen_bool(0.3) {
                let a = rng.gen_range(0..n_tracks);
                let b = rng.gen_range(0..n_tracks);
                ids.swap(a, b);
            }
            for (k, &(bx, by)) in base.iter().enumerate() {
                let x = bx + t as f64 * rng.gen_range(-2.0..2.0);
                let y = by + rng.gen_range(-2.0..2.0);
                let w = rng.gen_range(8.0..20.0);
                let h = rng.gen_range(8.0..20.0);
                if rng.gen_bool(0.9) {
                    gt.push(Detection {
                        id: k as i64 + 1,
                        bbox: BBox::new(x, y, w, h),
                        mask: None,
                    });
                }
                if rng.gen_bool(0.85) {
                    let j = rng.gen_range(0.0..0.5) * w;
                    pred.push(Detection {
                        id: ids[k],
                        bbox: BBox::new(x + j, y - j / 2.0, w * rng.gen_range(0.8..1.2), h),
                        mask: None,
                    });
                }
            }
            if rng.gen_bool(0.15) {
                pred.push(Detection {
                    id: 900 + rng.gen_range(0..2),
                    bbox: BBox::new(
                        rng.gen_range(0.0..70.0),
                        rng.gen_range(0.0..70.0),
                        12.0,
                        12.0,
                    ),
                    mask: None,
                });
            }
            KeyFrame {
                frame: t * 25,
                gt,
                pred,
            }
        })
        .collect()
}

fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Every partial injection from `n` rows into `m` columns.
fn injections(n: usize, m: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for partial in out {
            next.push([partial.clone(), vec![None]].concat());
            for j in 0..m {
                if !partial.contains(&Some(j)) {
                    next.push([partial.clone(), vec![Some(j)]].concat());
                }
            }
        }
        out = next;
    }
    out
}

/// Per-frame TP list at threshold `alpha`: the admissible matching with the
/// most pairs, then the largest summed similarity.
fn frame_matches(f: &KeyFrame, alpha: f64) -> Vec<(i64, i64)> {
    let mut best: Option<(usize, f64, Vec<(i64, i64)>)> = None;
    for inj in injections(f.gt.len(), f.pred.len()) {
        let mut ok = true;
        let mut pairs = Vec::new();
        let mut total = 0.0;
        for (g, p) in inj.iter().enumerate() {
            if let Some(p) = *p {
                let s = iou(&f.gt[g].bbox, &f.pred[p].bbox);
                if s < alpha {
                    ok = false;
                    break;
                }
                total += s;
                pairs.push((f.gt[g].id, f.pred[p].id));
            }
        }
        if !ok {
            continue;
        }
        let better = match &best {
            None => true,
            Some((c, t, _)) => pairs.len() > *c || (pairs.len() == *c && total > *t),
        };
        if better {
            best = Some((pairs.len(), total, pairs));
        }
    }
    best.map(|b| b.2).unwrap_or_default()
}

/// HOTA evaluated literally: collect TPs, then score each TP's association.
pub fn hota_oracle(frames: &[KeyFrame]) -> (f64, Vec<f64>) {
    let n_gt: usize = frames.iter().map(|f| f.gt.len()).sum();
    let n_pred: usize = frames.iter().map(|f| f.pred.len()).sum();
    let mut per_alpha = Vec::new();
    for &alpha in &ALPHAS {
        let tps: Vec<(i64, i64)> = frames
            .iter()
            .flat_map(|f| frame_matches(f, alpha))
            .collect();
        let tp = tps.len();
        let det_a = if tp == 0 {
            0.0
        } else {
            tp as f64 / (n_gt + n_pred - tp) as f64
        };
        let mut ass = 0.0;
        for &(g, p) in &tps {
            let tpa = tps.iter().filter(|&&c| c == (g, p)).count();
            let g_total = frames
                .iter()
                .flat_map(|f| &f.gt)
                .filter(|d| d.id == g)
                .count();
            let p_total = frames
                .iter()
                .flat_map(|f| &f.pred)
                .filter(|d| d.id == p)
                .count();
            let fna = g_total - tpa;
            let fpa = p_total - tpa;
            ass += tpa as f64 / (tpa + fna + fpa) as f64;
        }
        let ass_a = if tp == 0 { 0.0 } else { ass / tp as f64 };
        per_alpha.push((det_a * ass_a).sqrt());
    }
    (
        per_alpha.iter().sum::<f64>() / per_alpha.len() as f64,
        per_alpha,
    )
}

/// IDF1 by enumerating every gt-to-prediction trajectory injection.
pub fn idf1_oracle(frames: &[KeyFrame], threshold: f64) -> f64 {
    let mut gt_ids: Vec<i64> = frames
        .iter()
        .flat_map(|f| f.gt.iter().map(|d| d.id))
        .collect();
    gt_ids.sort();
    gt_ids.dedup();
    let mut pred_ids: Vec<i64> = frames
        .iter()
        .flat_map(|f| f.pred.iter().map(|d| d.id))
        .collect();
    pred_ids.sort();
    pred_ids.dedup();
    let n_gt: usize = frames.iter().map(|f| f.gt.len()).sum();
    let n_pred: usize = frames.iter().map(|f| f.pred.len()).sum();
    let mut best_idtp = 0;
    for inj in injections(gt_ids.len(), pred_ids.len()) {
        let mapping: BTreeMap<i64, i64> = inj
            .iter()
            .enumerate()
            .filter_map(|(g, p)| p.map(|p| (gt_ids[g], pred_ids[p])))
            .collect();
        let idtp = frames
            .iter()
            .flat_map(|f| f.gt.iter().map(move |g| (f, g)))
            .filter(|(f, g)| {
                mapping.get(&g.id).is_some_and(|pid| {
                    f.pred
                        .iter()
                        .any(|p| p.id == *pid && iou(&g.bbox, &p.bbox) >= threshold)
                })
            })
            .count();
        best_idtp = best_idtp.max(idtp);
    }
    if n_gt + n_pred == 0 {
        0.0
    } else {
        2.0 * best_idtp as f64 / (n_gt + n_pred) as f64
    }
}

/// Relabels prediction ids through a bijection.
pub fn permute_pred_ids(frames: &[KeyFrame], rng: &mut impl Rng) -> Vec<KeyFrame> {
    let mut ids: Vec<i64> = frames
        .iter()
        .flat_map(|f| f.pred.iter().map(|d| d.id))
        .collect();
    ids.sort();
    ids.dedup();
    let mut targets: Vec<i64> = ids.iter().map(|i| 5000 - i).collect();
    for i in (1..targets.len()).rev() {
        targets.swap(i, rng.gen_range(0..=i));
    }
    let map: BTreeMap<i64, i64> = ids.into_iter().zip(targets).collect();
    frames
        .iter()
        .map(|f| KeyFrame {
            frame: f.frame,
            gt: f.gt.clone(),
            pred: f
                .pred
                .iter()
                .map(|d| Detection {
                    id: map[&d.id],
                    ..d.clone()
                })
                .collect(),
        })
        .collect()
}
