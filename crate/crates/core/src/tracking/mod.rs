//! Keyframe-based tracking evaluation: HOTA and IDF1.
//!
//! Both metrics are computed only on annotated frames. Predictions on other
//! frames, or for videos without annotations, are ignored.

mod hota;
mod idf1;
mod report;

pub use hota::{hota, HotaScores, ALPHAS};
pub use idf1::{idf1, IdScores, DEFAULT_IDF1_THRESHOLD};
pub use report::{evaluate_tracking, MeanSd, TrackingReport, TrackingRow, VideoScores};

use crate::dataset::{BBox, Rle, TrackSet, TrackedMask};
use serde::Serialize;
use std::collections::BTreeMap;

/// One object (ground truth or prediction) on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub id: i64,
    pub bbox: BBox,
    pub mask: Option<Rle>,
}

impl From<&TrackedMask> for Detection {
    fn from(r: &TrackedMask) -> Self {
        Detection {
            id: r.track_id,
            bbox: r.bbox,
            mask: r.mask.clone(),
        }
    }
}

/// Which overlap measure produced the similarities of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    Mask,
    Bbox,
    Mixed,
    /// No gt/prediction pair was ever compared.
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimilarityUse {
    pub mask_pairs: u64,
    pub bbox_pairs: u64,
}

impl SimilarityUse {
    pub fn merge(self, other: SimilarityUse) -> SimilarityUse {
        SimilarityUse {
            mask_pairs: self.mask_pairs + other.mask_pairs,
            bbox_pairs: self.bbox_pairs + other.bbox_pairs,
        }
    }

    pub fn mode(self) -> SimilarityMode {
        match (self.mask_pairs > 0, self.bbox_pairs > 0) {
            (true, true) => SimilarityMode::Mixed,
            (true, false) => SimilarityMode::Mask,
            (false, true) => SimilarityMode::Bbox,
            (false, false) => SimilarityMode::None,
        }
    }
}

/// `gt x pred` similarity: mask IoU when both masks are present, else box IoU.
pub fn pairwise_similarity(gt: &[Detection], pred: &[Detection]) -> (Vec<Vec<f64>>, SimilarityUse) {
    let mut used = SimilarityUse::default();
    let sim = gt
        .iter()
        .map(|g| {
            pred.iter()
                .map(|p| match (&g.mask, &p.mask) {
                    (Some(a), Some(b)) => {
                        used.mask_pairs += 1;
                        a.iou(b)
                    }
                    _ => {
                        used.bbox_pairs += 1;
                        g.bbox.iou(&p.bbox)
                    }
                })
                .collect()
        })
        .collect();
    (sim, used)
}

/// Ground truth and predictions of one annotated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyFrame {
    pub frame: u32,
    pub gt: Vec<Detection>,
    pub pred: Vec<Detection>,
}

/// Annotated frames of one video with their precomputed similarities.
#[derive(Debug, Clone)]
pub struct VideoInstance {
    pub video_id: String,
    frames: Vec<PreparedFrame>,
    pub similarity: SimilarityUse,
}

#[derive(Debug, Clone)]
pub(crate) struct PreparedFrame {
    pub gt_ids: Vec<i64>,
    pub pred_ids: Vec<i64>,
    pub sim: Vec<Vec<f64>>,
}

impl VideoInstance {
    /// Objects within a frame are ordered by id so results do not depend on
    /// input order.
    pub fn new(video_id: &str, frames: Vec<KeyFrame>) -> Self {
        let mut similarity = SimilarityUse::default();
        let mut frames = frames;
        frames.sort_by_key(|f| f.frame);
        let prepared = frames
            .into_iter()
            .map(|mut f| {
                f.gt.sort_by_key(|d| d.id);
                f.pred.sort_by_key(|d| d.id);
                let (sim, used) = pairwise_similarity(&f.gt, &f.pred);
                similarity = similarity.merge(used);
                PreparedFrame {
                    gt_ids: f.gt.iter().map(|d| d.id).collect(),
                    pred_ids: f.pred.iter().map(|d| d.id).collect(),
                    sim,
                }
            })
            .collect();
        VideoInstance {
            video_id: video_id.to_string(),
            frames: prepared,
            similarity,
        }
    }

    /// Builds an instance directly from similarity matrices, bypassing
    /// geometry. Each entry is `(gt_ids, pred_ids, sim)`.
    pub fn from_similarities(
        video_id: &str,
        frames: Vec<(Vec<i64>, Vec<i64>, Vec<Vec<f64>>)>,
    ) -> Self {
        VideoInstance {
            video_id: video_id.to_string(),
            frames: frames
                .into_iter()
                .map(|(gt_ids, pred_ids, sim)| PreparedFrame {
                    gt_ids,
                    pred_ids,
                    sim,
                })
                .collect(),
            similarity: SimilarityUse::default(),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub(crate) fn frames(&self) -> &[PreparedFrame] {
        &self.frames
    }
}

/// Pairs annotated frames with predictions, one instance per annotated video.
pub fn build_instances(gt: &TrackSet, pred: &TrackSet) -> Vec<VideoInstance> {
    let gt_videos = gt.video_ids();
    for v in pred.video_ids() {
        if !gt_videos.contains(&v) {
            log::warn!("video {v} has predictions but no annotated keyframes; ignored");
        }
    }
    gt_videos
        .iter()
        .map(|video| {
            let mut pred_frames = pred.frames(video);
            let frames = gt
                .frames(video)
                .into_iter()
                .map(|(frame, objs)| KeyFrame {
                    frame,
                    gt: objs.into_iter().map(Detection::from).collect(),
                    pred: pred_frames
                        .remove(&frame)
                        .unwrap_or_default()
                        .into_iter()
                        .map(Detection::from)
                        .collect(),
                })
                .collect();
            VideoInstance::new(video, frames)
        })
        .collect()
}

/// Counts of detections per id over the annotated frames.
pub(crate) fn id_counts(frames: &[PreparedFrame]) -> (BTreeMap<i64, u64>, BTreeMap<i64, u64>) {
    let mut gt = BTreeMap::new();
    let mut pred = BTreeMap::new();
    for f in frames {
        for &g in &f.gt_ids {
            *gt.entry(g).or_insert(0) += 1;
        }
        for &p in &f.pred_ids {
            *pred.entry(p).or_insert(0) += 1;
        }
    }
    (gt, pred)
}
