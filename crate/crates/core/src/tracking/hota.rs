use super::{id_counts, VideoInstance};
use crate::assignment::{hungarian, Objective};
use serde::Serialize;
use std::collections::BTreeMap;

/// Localisation thresholds 0.05, 0.10, ..., 0.95.
pub const ALPHAS: [f64; 19] = {
    let mut a = [0.0; 19];
    let mut k = 0;
    while k < 19 {
        a[k] = (k + 1) as f64 / 20.0;
        k += 1;
    }
    a
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotaScores {
    pub det_a: Vec<f64>,
    pub ass_a: Vec<f64>,
    pub hota_alpha: Vec<f64>,
    pub tp: Vec<u64>,
    pub fn_: Vec<u64>,
    pub fp: Vec<u64>,
    pub hota: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// HOTA over the annotated frames of one video.
///
/// At each threshold every frame is matched independently: pairs with
/// similarity below the threshold are excluded, and among the rest the
/// matching with the most pairs and then the highest summed similarity wins.
pub fn hota(instance: &VideoInstance) -> HotaScores {
    let frames = instance.frames();
    let (gt_counts, pred_counts) = id_counts(frames);
    let n_gt: u64 = gt_counts.values().sum();
    let n_pred: u64 = pred_counts.values().sum();
    let mut out = HotaScores {
        det_a: Vec::with_capacity(ALPHAS.len()),
        ass_a: Vec::with_capacity(ALPHAS.len()),
        hota_alpha: Vec::with_capacity(ALPHAS.len()),
        tp: Vec::with_capacity(ALPHAS.len()),
        fn_: Vec::with_capacity(ALPHAS.len()),
        fp: Vec::with_capacity(ALPHAS.len()),
        hota: 0.0,
    };
    for &alpha in &ALPHAS {
        let mut pair_tp: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        let mut tp = 0u64;
        for f in frames {
            if f.gt_ids.is_empty() || f.pred_ids.is_empty() {
                continue;
            }
            let gated: Vec<Vec<f64>> = f
                .sim
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&s| if s >= alpha { s } else { f64::NEG_INFINITY })
                        .collect()
                })
                .collect();
            for (g, p) in hungarian(&gated, Objective::Maximize).pairs {
                tp += 1;
                *pair_tp.entry((f.gt_ids[g], f.pred_ids[p])).or_insert(0) += 1;
            }
        }
        let fn_ = n_gt - tp;
        let fp = n_pred - tp;
        let det_a = ratio(tp as f64, (tp + fn_ + fp) as f64);
        // Every TP of pair (g, p) shares the same association score, so the
        // mean over TPs is a TP-weighted mean over pairs. Terms are summed in
        // sorted order so relabelling ids cannot change the rounding.
        let mut terms: Vec<f64> = pair_tp
            .iter()
            .map(|(&(g, p), &tpa)| {
                let fna = gt_counts[&g] - tpa;
                let fpa = pred_counts[&p] - tpa;
                tpa as f64 * tpa as f64 / (tpa + fna + fpa) as f64
            })
            .collect();
        terms.sort_by(f64::total_cmp);
        let ass_sum: f64 = terms.iter().sum();
        let ass_a = ratio(ass_sum, tp as f64);
        out.det_a.push(det_a);
        out.ass_a.push(ass_a);
        out.hota_alpha.push((det_a * ass_a).sqrt());
        out.tp.push(tp);
        out.fn_.push(fn_);
        out.fp.push(fp);
    }
    out.hota = out.hota_alpha.iter().sum::<f64>() / ALPHAS.len() as f64;
    out
}
