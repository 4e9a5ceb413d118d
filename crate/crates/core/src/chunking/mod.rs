//! Long-video chunk planning and cross-chunk identity stitching.
//!
//! The planner picks a grounding frame and chunk boundaries from detector
//! output, derives point prompts from the final masks of each chunk, matches
//! identities across boundaries and applies human corrections.

mod corrections;
mod matching;
mod plan;
mod prompts;
mod review;

pub use corrections::{
    apply_corrections, invert_corrections, load_corrections, write_corrections, Anomaly,
    AnomalyKind, BoundaryCorrection, Corrections, Edit,
};
pub use matching::{boundary_masks, match_identities, BoundaryMatch, MatchedPair};
pub use plan::{
    grounding_scores, load_plan, plan_boundaries, plan_video, score_grounding, BoundaryChoice,
    ChunkPlan, FrameSeparationScore,
};
pub use prompts::{
    extract_point_prompts, pole_of_inaccessibility, squared_distance_transform, PointPrompt,
    PromptSet,
};
pub use review::{
    export_review_bundle, load_review_manifest, CropSource, MaskCrops, ReviewBoundary,
    ReviewManifest, ReviewProposal, REVIEW_SCHEMA_VERSION,
};

use crate::dataset::{read_to_string, write_atomic, BBox, TrackSet};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Nominal chunk length in frames (60 s at 25 fps).
    pub chunk_len: u32,
    /// Boundary search radius around each nominal boundary.
    pub delta: u32,
    /// Separation at which the grounding score saturates, in pixels.
    pub d_ref: f64,
    pub expected_count: usize,
    /// Frames examined for grounding, starting at frame 0.
    pub grounding_frames: u32,
    pub tau_match: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            chunk_len: 1500,
            delta: 125,
            d_ref: 100.0,
            expected_count: 3,
            grounding_frames: 125,
            tau_match: 0.3,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_len == 0 {
            return Err(Error::Config("chunk_len must be positive".into()));
        }
        if 2 * self.delta >= self.chunk_len {
            return Err(Error::Config(format!(
                "delta {} must be below half the chunk length ({})",
                self.delta,
                self.chunk_len / 2
            )));
        }
        if !(self.d_ref > 0.0) {
            return Err(Error::Config("d_ref must be positive".into()));
        }
        if self.expected_count == 0 || self.grounding_frames == 0 {
            return Err(Error::Config(
                "expected_count and grounding_frames must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.tau_match) {
            return Err(Error::Config("tau_match must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One detector box with its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDetection {
    pub bbox: BBox,
    pub confidence: f64,
}

/// Per-frame detections of one video; frames without an entry have none.
pub type DetectionStream = BTreeMap<u32, Vec<BoxDetection>>;

/// Detections file: `video_id<TAB>frame<TAB>x y w h<TAB>conf`, one box per line.
pub fn parse_detections(path: &Path, text: &str) -> Result<BTreeMap<String, DetectionStream>> {
    let mut out: BTreeMap<String, DetectionStream> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let frame: u32 = cols[1]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad frame {:?}", cols[1])))?;
        let nums: Vec<f64> = cols[2]
            .split(' ')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, line_no, format!("bad box {:?}", cols[2])))?;
        if nums.len() != 4 || nums.iter().any(|v| !v.is_finite()) || nums[2] < 0.0 || nums[3] < 0.0
        {
            return Err(Error::parse(
                path,
                line_no,
                format!("bad box {:?}", cols[2]),
            ));
        }
        let confidence: f64 = cols[3]
            .parse()
            .ok()
            .filter(|c| (0.0..=1.0).contains(c))
            .ok_or_else(|| {
                Error::parse(
                    path,
                    line_no,
                    format!("confidence {:?} outside [0, 1]", cols[3]),
                )
            })?;
        out.entry(cols[0].to_string())
            .or_default()
            .entry(frame)
            .or_default()
            .push(BoxDetection {
                bbox: BBox::new(nums[0], nums[1], nums[2], nums[3]),
                confidence,
            });
    }
    Ok(out)
}

pub fn load_detections(path: &Path) -> Result<BTreeMap<String, DetectionStream>> {
    parse_detections(path, &read_to_string(path)?)
}

pub fn serialize_detections(streams: &BTreeMap<String, DetectionStream>) -> String {
    let mut out = String::new();
    for (video, stream) in streams {
        for (frame, dets) in stream {
            for d in dets {
                let b = d.bbox;
                writeln!(
                    out,
                    "{video}\t{frame}\t{} {} {} {}\t{}",
                    b.x, b.y, b.w, b.h, d.confidence
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn write_detections(path: &Path, streams: &BTreeMap<String, DetectionStream>) -> Result<()> {
    write_atomic(path, serialize_detections(streams).as_bytes())
}

/// Uses tracked boxes as detections when no separate detector output exists.
pub fn detections_from_tracks(tracks: &TrackSet) -> BTreeMap<String, DetectionStream> {
    let mut out: BTreeMap<String, DetectionStream> = BTreeMap::new();
    for r in tracks.records() {
        out.entry(r.video_id.clone())
            .or_default()
            .entry(r.frame)
            .or_default()
            .push(BoxDetection {
                bbox: r.bbox,
                confidence: r.confidence,
            });
    }
    out
}

/// Smallest pairwise distance between box centres; `None` below two boxes.
pub fn min_pair_distance(dets: &[BoxDetection]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in dets.iter().enumerate() {
        let (ax, ay) = a.bbox.center();
        for b in &dets[i + 1..] {
            let (bx, by) = b.bbox.center();
            let d = (ax - bx).hypot(ay - by);
            best = Some(best.map_or(d, |m: f64| m.min(d)));
        }
    }
    best
}
