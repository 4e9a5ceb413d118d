use super::{id_counts, VideoInstance};
use crate::assignment::{hungarian, Objective};
use serde::Serialize;
use std::collections::BTreeMap;

pub const DEFAULT_IDF1_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdScores {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub idf1: f64,
}

/// Identity F1 under the one-to-one gt/prediction trajectory matching that
/// maximises identity-consistent detections. A detection pair counts only on
/// frames where its similarity reaches `threshold`.
pub fn idf1(instance: &VideoInstance, threshold: f64) -> IdScores {
    let frames = instance.frames();
    let (gt_counts, pred_counts) = id_counts(frames);
    let gt_ids: Vec<i64> = gt_counts.keys().copied().collect();
    let pred_ids: Vec<i64> = pred_counts.keys().copied().collect();
    let gt_pos: BTreeMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let pred_pos: BTreeMap<i64, usize> =
        pred_ids.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut overlap = vec![vec![0.0; pred_ids.len()]; gt_ids.len()];
    for f in frames {
        for (gi, g) in f.gt_ids.iter().enumerate() {
            for (pi, p) in f.pred_ids.iter().enumerate() {
                if f.sim[gi][pi] >= threshold {
                    overlap[gt_pos[g]][pred_pos[p]] += 1.0;
                }
            }
        }
    }
    let idtp = hungarian(&overlap, Objective::Maximize).total as u64;
    let n_gt: u64 = gt_counts.values().sum();
    let n_pred: u64 = pred_counts.values().sum();
    let idfn = n_gt - idtp;
    let idfp = n_pred - idtp;
    let den = 2 * idtp + idfp + idfn;
    IdScores {
        idtp,
        idfp,
        idfn,
        idf1: if den > 0 {
            2.0 * idtp as f64 / den as f64
        } else {
            0.0
        },
    }
}
