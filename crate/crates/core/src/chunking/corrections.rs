//! Human identity corrections and their application to a track set.
//!
//! An edit `track_id -> bird_id` at a boundary relabels that tracker id from
//! the boundary onwards, until a later edit for the same tracker id replaces
//! it. Edits always refer to the tracker ids found in the input file.

use super::ReviewManifest;
use crate::dataset::{read_to_string, write_atomic, TrackSet, TrackedMask};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corrections {
    pub video_id: String,
    pub corrections: Vec<BoundaryCorrection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryCorrection {
    pub boundary_frame: u32,
    #[serde(default)]
    pub edits: Vec<Edit>,
    #[serde(default)]
    pub anomalies: Vec<Anomaly>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edit {
    pub track_id: i64,
    pub bird_id: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyKind {
    Lost,
    Merged,
    Spurious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anomaly {
    pub track_id: i64,
    pub kind: AnomalyKind,
}

impl Corrections {
    /// The file a reviewer produces by confirming every proposal: one entry
    /// per boundary, no edits.
    pub fn confirm_all(manifest: &ReviewManifest) -> Self {
        Corrections {
            video_id: manifest.video_id.clone(),
            corrections: manifest
                .boundaries
                .iter()
                .map(|b| BoundaryCorrection {
                    boundary_frame: b.boundary_frame,
                    edits: Vec::new(),
                    anomalies: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.corrections
            .iter()
            .all(|c| c.edits.is_empty() && c.anomalies.is_empty())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corrections serialise")
    }
}

pub fn load_corrections(path: &Path) -> Result<Corrections> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

pub fn write_corrections(path: &Path, c: &Corrections) -> Result<()> {
    write_atomic(path, c.to_json().as_bytes())
}

struct Resolved {
    chunk_starts: Vec<u32>,
    /// Tracker ids present in each chunk, minus dropped ones, with their label.
    labels: Vec<BTreeMap<i64, i64>>,
    dropped: BTreeSet<(usize, i64)>,
}

fn chunk_of(starts: &[u32], frame: u32) -> usize {
    starts.partition_point(|&s| s <= frame) - 1
}

fn resolve(tracks: &TrackSet, boundaries: &[u32], corr: &Corrections) -> Result<Resolved> {
    let video = corr.video_id.as_str();
    let fail = |m: String| Err(Error::Validation(format!("corrections for {video}: {m}")));
    let mut chunk_starts = vec![0];
    chunk_starts.extend(boundaries.iter().copied().filter(|&b| b > 0));
    if chunk_starts.windows(2).any(|w| w[0] >= w[1]) {
        return fail("plan boundaries are not strictly ascending".into());
    }
    let mut by_boundary: BTreeMap<u32, &BoundaryCorrection> = BTreeMap::new();
    for c in &corr.corrections {
        if chunk_starts.binary_search(&c.boundary_frame).is_err() {
            return fail(format!(
                "{} is not a boundary of the plan",
                c.boundary_frame
            ));
        }
        if by_boundary.insert(c.boundary_frame, c).is_some() {
            return fail(format!("boundary {} listed twice", c.boundary_frame));
        }
    }
    let mut present: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); chunk_starts.len()];
    for r in tracks.records().iter().filter(|r| r.video_id == video) {
        present[chunk_of(&chunk_starts, r.frame)].insert(r.track_id);
    }
    let mut current: BTreeMap<i64, i64> = BTreeMap::new();
    let mut dropped = BTreeSet::new();
    let mut labels = Vec::with_capacity(chunk_starts.len());
    for (k, &start) in chunk_starts.iter().enumerate() {
        if let Some(c) = by_boundary.get(&start) {
            let mut edited = BTreeSet::new();
            let mut targets = BTreeMap::new();
            for e in &c.edits {
                if !present[k].contains(&e.track_id) {
                    return fail(format!(
                        "edit at {start} refers to unknown track {}",
                        e.track_id
                    ));
                }
                if !edited.insert(e.track_id) {
                    return fail(format!("track {} edited twice at {start}", e.track_id));
                }
                if let Some(other) = targets.insert(e.bird_id, e.track_id) {
                    return fail(format!(
                        "conflicting edits at {start}: tracks {other} and {} both assigned bird {}",
                        e.track_id, e.bird_id
                    ));
                }
            }
            for a in &c.anomalies {
                if !present[k].contains(&a.track_id) {
                    return fail(format!(
                        "anomaly at {start} refers to unknown track {}",
                        a.track_id
                    ));
                }
                match a.kind {
                    AnomalyKind::Merged => {
                        return fail(format!(
                            "track {} at {start} is marked merged; splitting merged masks is not supported",
                            a.track_id
                        ))
                    }
                    AnomalyKind::Spurious => {
                        dropped.insert((k, a.track_id));
                    }
                    AnomalyKind::Lost => {}
                }
            }
            for e in &c.edits {
                current.insert(e.track_id, e.bird_id);
            }
        }
        let mut chunk_labels = BTreeMap::new();
        let mut taken: BTreeMap<i64, i64> = BTreeMap::new();
        for &t in present[k].iter().filter(|&&t| !dropped.contains(&(k, t))) {
            let label = current.get(&t).copied().unwrap_or(t);
            if let Some(other) = taken.insert(label, t) {
                return fail(format!(
                    "tracks {other} and {t} would both carry id {label} in the chunk starting at {start}"
                ));
            }
            chunk_labels.insert(t, label);
        }
        labels.push(chunk_labels);
    }
    Ok(Resolved {
        chunk_starts,
        labels,
        dropped,
    })
}

/// Relabels the corrected video's records; other videos pass through.
/// `boundaries` are the plan's chunk boundaries; a correction may also
/// target frame 0 to relabel the first chunk.
pub fn apply_corrections(
    tracks: &TrackSet,
    boundaries: &[u32],
    corr: &Corrections,
) -> Result<TrackSet> {
    let res = resolve(tracks, boundaries, corr)?;
    let records: Vec<TrackedMask> = tracks
        .records()
        .iter()
        .filter_map(|r| {
            if r.video_id != corr.video_id {
                return Some(r.clone());
            }
            let k = chunk_of(&res.chunk_starts, r.frame);
            if res.dropped.contains(&(k, r.track_id)) {
                return None;
            }
            Some(TrackedMask {
                track_id: res.labels[k][&r.track_id],
                ..r.clone()
            })
        })
        .collect();
    TrackSet::new(records)
}

/// Corrections that, applied to the output of `apply_corrections(tracks,
/// boundaries, corr)`, restore the original ids. Dropped tracks stay dropped.
pub fn invert_corrections(
    tracks: &TrackSet,
    boundaries: &[u32],
    corr: &Corrections,
) -> Result<Corrections> {
    let res = resolve(tracks, boundaries, corr)?;
    let mut inverse: BTreeMap<i64, i64> = BTreeMap::new();
    let mut out = Vec::new();
    for (k, labels) in res.labels.iter().enumerate() {
        let edits: Vec<Edit> = labels
            .iter()
            .filter(|&(&raw, &label)| inverse.get(&label).copied().unwrap_or(label) != raw)
            .map(|(&raw, &label)| Edit {
                track_id: label,
                bird_id: raw,
            })
            .collect();
        if edits.is_empty() {
            continue;
        }
        for e in &edits {
            inverse.insert(e.track_id, e.bird_id);
        }
        let mut edits = edits;
        edits.sort_by_key(|e| e.track_id);
        out.push(BoundaryCorrection {
            boundary_frame: res.chunk_starts[k],
            edits,
            anomalies: Vec::new(),
        });
    }
    Ok(Corrections {
        video_id: corr.video_id.clone(),
        corrections: out,
    })
}
