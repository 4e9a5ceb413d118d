use super::{min_pair_distance, BoxDetection, DetectionStream, PlannerConfig, PointPrompt};
use crate::dataset::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameSeparationScore {
    pub frame: u32,
    pub min_pair_dist: Option<f64>,
    pub min_confidence: f64,
    pub n_detected: usize,
    pub score: f64,
}

impl FrameSeparationScore {
    /// `min_confidence * min(min_pair_dist / d_ref, 1)`. A single detection
    /// has no pair and counts as fully separated.
    pub fn of(frame: u32, dets: &[BoxDetection], d_ref: f64) -> Self {
        let min_confidence = dets
            .iter()
            .map(|d| d.confidence)
            .fold(f64::INFINITY, f64::min);
        let min_confidence = if dets.is_empty() { 0.0 } else { min_confidence };
        let min_pair_dist = min_pair_distance(dets);
        let separation = min_pair_dist.map_or(1.0, |d| (d / d_ref).min(1.0));
        FrameSeparationScore {
            frame,
            min_pair_dist,
            min_confidence,
            n_detected: dets.len(),
            score: min_confidence * separation,
        }
    }
}

/// Scores of frames `0..grounding_frames`.
pub fn grounding_scores(
    stream: &DetectionStream,
    cfg: &PlannerConfig,
) -> Vec<FrameSeparationScore> {
    (0..cfg.grounding_frames)
        .map(|f| {
            FrameSeparationScore::of(f, stream.get(&f).map_or(&[][..], Vec::as_slice), cfg.d_ref)
        })
        .collect()
}

/// Best-scoring grounding frame among those detecting the expected number
/// of birds (or, failing that, the largest number seen); earliest on ties.
pub fn score_grounding(stream: &DetectionStream, cfg: &PlannerConfig) -> Result<u32> {
    let scores = grounding_scores(stream, cfg);
    let max_count = scores.iter().map(|s| s.n_detected).max().unwrap_or(0);
    if max_count == 0 {
        return Err(Error::Degenerate("no groundable frame".into()));
    }
    let wanted = if scores.iter().any(|s| s.n_detected == cfg.expected_count) {
        cfg.expected_count
    } else {
        max_count
    };
    let mut best: Option<&FrameSeparationScore> = None;
    for s in scores.iter().filter(|s| s.n_detected == wanted) {
        if best.is_none_or(|b| s.score > b.score) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one frame has the wanted count").frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryChoice {
    pub nominal: u32,
    pub frame: u32,
    pub min_pair_dist: Option<f64>,
    /// No frame in the window had two detections; the nominal frame was kept.
    pub warning: bool,
}

/// One boundary per nominal multiple of the chunk length inside the video,
/// each placed at the best-separated frame within `±delta`.
pub fn plan_boundaries(
    stream: &DetectionStream,
    frame_count: u32,
    cfg: &PlannerConfig,
) -> Result<Vec<BoundaryChoice>> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut nominal = cfg.chunk_len;
    while nominal < frame_count {
        let lo = nominal.saturating_sub(cfg.delta).max(1);
        let hi = (nominal + cfg.delta).min(frame_count - 1);
        let mut best: Option<(f64, u32)> = None;
        for f in lo..=hi {
            let Some(d) = stream.get(&f).and_then(|dets| min_pair_distance(dets)) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bd, bf)) => d > bd || (d == bd && f.abs_diff(nominal) < bf.abs_diff(nominal)),
            };
            if better {
                best = Some((d, f));
            }
        }
        out.push(match best {
            Some((d, f)) => BoundaryChoice {
                nominal,
                frame: f,
                min_pair_dist: Some(d),
                warning: false,
            },
            None => {
                log::warn!("no frame near {nominal} has two detections; boundary kept at nominal");
                BoundaryChoice {
                    nominal,
                    frame: nominal,
                    min_pair_dist: None,
                    warning: true,
                }
            }
        });
        nominal += cfg.chunk_len;
    }
    Ok(out)
}

/// Plan file handed to the tracker driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub video_id: String,
    pub grounding_frame: u32,
    pub chunk_len_nominal: u32,
    pub delta: u32,
    pub boundaries: Vec<u32>,
    /// Boundaries kept at their nominal frame for lack of detections.
    #[serde(default)]
    pub warnings: Vec<u32>,
    #[serde(default)]
    pub prompts: Vec<PointPrompt>,
}

impl ChunkPlan {
    pub fn validate(&self) -> Result<()> {
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "plan for {}: boundaries are not strictly ascending",
                self.video_id
            )));
        }
        for (n, &b) in self.boundaries.iter().enumerate() {
            let nominal = (n as u32 + 1) * self.chunk_len_nominal;
            if b.abs_diff(nominal) > self.delta {
                return Err(Error::Validation(format!(
                    "plan for {}: boundary {b} is more than {} frames from {nominal}",
                    self.video_id, self.delta
                )));
            }
        }
        if self
            .prompts
            .iter()
            .any(|p| !self.boundaries.contains(&p.boundary))
        {
            return Err(Error::Validation(format!(
                "plan for {}: prompt refers to an unknown boundary",
                self.video_id
            )));
        }
        Ok(())
    }

    /// Start frame of every chunk, beginning with 0.
    pub fn chunk_starts(&self) -> Vec<u32> {
        std::iter::once(0)
            .chain(self.boundaries.iter().copied())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

pub fn load_plan(path: &Path) -> Result<ChunkPlan> {
    let plan: ChunkPlan = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    plan.validate()?;
    Ok(plan)
}

/// Grounding frame plus boundaries for one video, without prompts.
pub fn plan_video(
    video_id: &str,
    stream: &DetectionStream,
    frame_count: u32,
    cfg: &PlannerConfig,
) -> Result<ChunkPlan> {
    let grounding_frame = score_grounding(stream, cfg)
        .map_err(|e| Error::Degenerate(format!("video {video_id}: {e}")))?;
    let choices = plan_boundaries(stream, frame_count, cfg)?;
    Ok(ChunkPlan {
        video_id: video_id.to_string(),
        grounding_frame,
        chunk_len_nominal: cfg.chunk_len,
        delta: cfg.delta,
        boundaries: choices.iter().map(|c| c.frame).collect(),
        warnings: choices
            .iter()
            .filter(|c| c.warning)
            .map(|c| c.frame)
            .collect(),
        prompts: Vec::new(),
    })
}
