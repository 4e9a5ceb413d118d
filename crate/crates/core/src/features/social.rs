//! Pairwise context between the focal bird and the other birds in frame.

use super::shape::AnchoredPoint;
use crate::dataset::BBox;

/// Default neighbour radius in pixels (about one body length at 704x576).
pub const DEFAULT_NEIGHBOR_RADIUS: f64 = 150.0;

/// Where one bird is at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialObservation {
    pub track_id: i64,
    pub centroid: AnchoredPoint,
    pub bbox: BBox,
}

/// min_pair_dist, mean_pair_dist, approach_speed, neighbors_within_r, nn_bbox_iou.
pub type SocialFeatures = [Option<f64>; 5];

/// Distance to the nearest other bird and the nearest bird's index.
fn nearest(
    frame: &[SocialObservation],
    focal: &SocialObservation,
) -> Option<(f64, usize, Vec<f64>)> {
    let mut dists = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for (i, o) in frame.iter().enumerate() {
        if o.track_id == focal.track_id {
            continue;
        }
        let (dx, dy) = o.centroid.delta(&focal.centroid);
        let d = dx.hypot(dy);
        dists.push(d);
        // Ties keep the earlier (lower track id) neighbour.
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(d, i)| (d, i, dists))
}

/// Social features of `focal_id` at one frame. `previous` is the frame before,
/// used for the approach speed. Missing when the focal bird is absent or alone.
pub fn frame_social_features(
    current: &[SocialObservation],
    previous: Option<&[SocialObservation]>,
    focal_id: i64,
    radius: f64,
    fps: f64,
) -> SocialFeatures {
    let mut out = [None; 5];
    let Some(focal) = current.iter().find(|o| o.track_id == focal_id) else {
        return out;
    };
    let Some((min_d, nn, dists)) = nearest(current, focal) else {
        return out;
    };
    out[0] = Some(min_d);
    out[1] = Some(dists.iter().sum::<f64>() / dists.len() as f64);
    out[3] = Some(dists.iter().filter(|&&d| d <= radius).count() as f64);
    out[4] = Some(focal.bbox.iou(&current[nn].bbox));
    out[2] = previous.and_then(|prev| {
        let pf = prev.iter().find(|o| o.track_id == focal_id)?;
        let (prev_min, _, _) = nearest(prev, pf)?;
        Some(-(min_d - prev_min) * fps)
    });
    out
}
