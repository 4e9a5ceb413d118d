//! Handcrafted mask features: 19 per-frame measurements summarised by nine
//! statistics into a 171-value descriptor per scoring window.
//!
//! Feature order (1-based ids used in the features CSV):
//!
//! | ids   | group    | features |
//! |-------|----------|----------|
//! | 1-9   | spatial  | area, perimeter, circularity, solidity, eccentricity, major_axis, minor_axis, extent, orientation |
//! | 10-14 | temporal | speed, accel, turning_angle, orientation_rate, area_rate |
//! | 15-19 | social   | min_pair_dist, mean_pair_dist, approach_speed, neighbors_within_r, nn_bbox_iou |

pub mod shape;
pub mod social;
pub mod spatial;
pub mod standardize;
pub mod summary;
pub mod temporal;

pub use social::{frame_social_features, SocialObservation, DEFAULT_NEIGHBOR_RADIUS};
pub use spatial::{frame_spatial_features, SpatialFeatures};
pub use standardize::Standardizer;
pub use summary::{
    nine_statistics, summarize_window, FeatureImputer, WindowFeatureVector, MIN_VALID_FRAMES,
};
pub use temporal::{frame_temporal_features, TrackPoint};

use crate::dataset::{BBox, LabelWindow, TrackSet, FPS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

pub const FEATURE_COUNT: usize = 19;
pub const STAT_COUNT: usize = 9;
pub const VECTOR_LEN: usize = FEATURE_COUNT * STAT_COUNT;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "area",
    "perimeter",
    "circularity",
    "solidity",
    "eccentricity",
    "major_axis",
    "minor_axis",
    "extent",
    "orientation",
    "speed",
    "accel",
    "turning_angle",
    "orientation_rate",
    "area_rate",
    "min_pair_dist",
    "mean_pair_dist",
    "approach_speed",
    "neighbors_within_r",
    "nn_bbox_iou",
];

pub const STAT_NAMES: [&str; STAT_COUNT] = [
    "mean", "sd", "skew", "kurt", "min", "p25", "median", "p75", "max",
];

/// Column names of the 171 values, e.g. `f01_mean` .. `f19_max`.
pub fn column_names() -> Vec<String> {
    (1..=FEATURE_COUNT)
        .flat_map(|f| STAT_NAMES.iter().map(move |s| format!("f{f:02}_{s}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub fps: f64,
    pub neighbor_radius: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            fps: FPS,
            neighbor_radius: DEFAULT_NEIGHBOR_RADIUS,
        }
    }
}

/// One 19-wide row of per-frame features with missing markers.
pub type FrameRow = [Option<f64>; FEATURE_COUNT];

#[derive(Debug, Clone, Copy)]
struct FrameGeometry {
    spatial: SpatialFeatures,
    bbox: BBox,
}

/// Precomputed geometry of every non-empty mask of one video.
pub struct VideoGeometry {
    by_key: HashMap<(i64, u32), FrameGeometry>,
    by_frame: BTreeMap<u32, Vec<SocialObservation>>,
}

impl VideoGeometry {
    pub fn build(tracks: &TrackSet, video_id: &str) -> Self {
        let records: Vec<_> = tracks
            .records()
            .iter()
            .filter(|r| r.video_id == video_id)
            .collect();
        let geoms: Vec<((i64, u32), Option<FrameGeometry>)> = records
            .par_iter()
            .map(|r| {
                let g = r
                    .mask
                    .as_ref()
                    .and_then(frame_spatial_features)
                    .map(|spatial| FrameGeometry {
                        spatial,
                        bbox: r.bbox,
                    });
                ((r.track_id, r.frame), g)
            })
            .collect();
        let mut by_key = HashMap::with_capacity(geoms.len());
        let mut by_frame: BTreeMap<u32, Vec<SocialObservation>> = BTreeMap::new();
        for ((track, frame), g) in geoms {
            if let Some(g) = g {
                by_key.insert((track, frame), g);
                by_frame.entry(frame).or_default().push(SocialObservation {
                    track_id: track,
                    centroid: g.spatial.moments.centroid,
                    bbox: g.bbox,
                });
            }
        }
        for obs in by_frame.values_mut() {
            obs.sort_by_key(|o| o.track_id);
        }
        VideoGeometry { by_key, by_frame }
    }

    fn track_point(&self, track: i64, frame: u32) -> Option<TrackPoint> {
        self.by_key.get(&(track, frame)).map(|g| TrackPoint {
            centroid: g.spatial.moments.centroid,
            orientation: g.spatial.orientation,
            area: g.spatial.area,
        })
    }

    /// All 19 features of `track` at `frame`.
    pub fn frame_row(&self, track: i64, frame: u32, cfg: &FeatureConfig) -> FrameRow {
        let mut row = [None; FEATURE_COUNT];
        if let Some(g) = self.by_key.get(&(track, frame)) {
            for (dst, v) in row[..9].iter_mut().zip(g.spatial.as_array()) {
                *dst = Some(v);
            }
        }
        let temporal = frame_temporal_features(|f| self.track_point(track, f), frame, cfg.fps);
        row[9..14].copy_from_slice(&temporal);
        if let Some(current) = self.by_frame.get(&frame) {
            let previous = frame
                .checked_sub(1)
                .and_then(|p| self.by_frame.get(&p))
                .map(|v| v.as_slice());
            let social =
                frame_social_features(current, previous, track, cfg.neighbor_radius, cfg.fps);
            row[14..19].copy_from_slice(&social);
        }
        row
    }
}

/// Computes the descriptor of every labelled window. Bird ids are matched
/// against track ids, so tracks must already carry canonical bird ids.
/// Output follows the order of `labels`.
pub fn extract_features(
    tracks: &TrackSet,
    labels: &[LabelWindow],
    cfg: &FeatureConfig,
) -> Vec<WindowFeatureVector> {
    let mut by_video: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_video.entry(l.video_id.as_str()).or_default().push(i);
    }
    let mut out: Vec<Option<WindowFeatureVector>> = vec![None; labels.len()];
    for (video, idxs) in by_video {
        let geom = VideoGeometry::build(tracks, video);
        let done: Vec<(usize, WindowFeatureVector)> = idxs
            .par_iter()
            .map(|&i| {
                let l = &labels[i];
                let series: Vec<FrameRow> = (l.start_frame..l.end_frame)
                    .map(|f| geom.frame_row(l.bird_id, f, cfg))
                    .collect();
                (i, summarize_window(l.key(), &series))
            })
            .collect();
        for (i, w) in done {
            out[i] = Some(w);
        }
    }
    out.into_iter()
        .map(|w| w.expect("every window summarised"))
        .collect()
}
