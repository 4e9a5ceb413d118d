//! Newline-delimited track records.
//!
//! One record per line, tab separated:
//!
//! ```text
//! video_id  frame  track_id  x y w h  conf  H W  rle_counts
//! ```
//!
//! `rle_counts` is comma separated. Keyframe annotations use the same layout
//! with a `gt_` prefix on the id column, and may omit the mask by writing `-`
//! in both the `H W` and `rle_counts` columns.

use super::rle::{BBox, Rle};
use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// One object's mask and box at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedMask {
    pub video_id: String,
    pub frame: u32,
    pub track_id: i64,
    pub bbox: BBox,
    pub confidence: f64,
    /// Absent only for box-only keyframe annotations.
    pub mask: Option<Rle>,
}

impl TrackedMask {
    /// Builds a record whose box is the tight box of `mask`.
    pub fn from_mask(
        video_id: &str,
        frame: u32,
        track_id: i64,
        confidence: f64,
        mask: Rle,
    ) -> Self {
        let bbox = mask.bbox().unwrap_or(BBox::new(0.0, 0.0, 0.0, 0.0));
        TrackedMask {
            video_id: video_id.to_string(),
            frame,
            track_id,
            bbox,
            confidence,
            mask: Some(mask),
        }
    }

    fn describe(&self) -> String {
        format!(
            "record (video {}, frame {}, track {})",
            self.video_id, self.frame, self.track_id
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Validation(format!(
                "{}: confidence {} outside [0, 1]",
                self.describe(),
                self.confidence
            )));
        }
        if let Some(mask) = &self.mask {
            mask.validate()
                .map_err(|e| Error::Validation(format!("{}: {e}", self.describe())))?;
            let tight = mask.bbox().unwrap_or(BBox::new(0.0, 0.0, 0.0, 0.0));
            if tight != self.bbox {
                return Err(Error::Validation(format!(
                    "{}: bbox {:?} is not the tight box {:?} of its mask",
                    self.describe(),
                    self.bbox,
                    tight
                )));
            }
        }
        Ok(())
    }
}

/// Validated, canonically ordered collection of track records.
///
/// Records are sorted by `(video_id, track_id, frame)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    records: Vec<TrackedMask>,
}

impl TrackSet {
    /// Sorts, checks invariants and rejects duplicate `(video, track, frame)` keys.
    pub fn new(mut records: Vec<TrackedMask>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        records.sort_by(|a, b| {
            (&a.video_id, a.track_id, a.frame).cmp(&(&b.video_id, b.track_id, b.frame))
        });
        for pair in records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.video_id == b.video_id && a.track_id == b.track_id && a.frame == b.frame {
                return Err(Error::Validation(format!(
                    "duplicate record for video {}, track {}, frame {}",
                    a.video_id, a.track_id, a.frame
                )));
            }
        }
        Ok(TrackSet { records })
    }

    pub fn records(&self) -> &[TrackedMask] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TrackedMask> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn video_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.iter().map(|r| r.video_id.clone()).collect();
        ids.dedup();
        ids
    }

    /// Records of one video grouped by frame, each frame sorted by track id.
    pub fn frames(&self, video_id: &str) -> BTreeMap<u32, Vec<&TrackedMask>> {
        let mut out: BTreeMap<u32, Vec<&TrackedMask>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.video_id == video_id) {
            out.entry(r.frame).or_default().push(r);
        }
        out
    }

    /// Records of one video grouped by track id, each track sorted by frame.
    pub fn tracks(&self, video_id: &str) -> BTreeMap<i64, Vec<&TrackedMask>> {
        let mut out: BTreeMap<i64, Vec<&TrackedMask>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.video_id == video_id) {
            out.entry(r.track_id).or_default().push(r);
        }
        out
    }
}

fn parse_line(path: &Path, lineno: usize, line: &str) -> Result<TrackedMask> {
    let err = |msg: String| Error::parse(path, lineno, msg);
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 7 {
        return Err(err(format!(
            "expected 7 tab-separated columns, found {}",
            cols.len()
        )));
    }
    let frame: u32 = cols[1]
        .parse()
        .map_err(|_| err(format!("bad frame index {:?}", cols[1])))?;
    let id_str = cols[2].strip_prefix("gt_").unwrap_or(cols[2]);
    let track_id: i64 = id_str
        .parse()
        .map_err(|_| err(format!("bad track id {:?}", cols[2])))?;
    let nums: Vec<f64> = cols[3]
        .split(' ')
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(format!("bad bbox {:?}", cols[3])))?;
    if nums.len() != 4 || nums.iter().any(|v| !v.is_finite()) {
        return Err(err(format!(
            "bbox needs 4 finite numbers, got {:?}",
            cols[3]
        )));
    }
    let confidence: f64 = cols[4]
        .parse()
        .map_err(|_| err(format!("bad confidence {:?}", cols[4])))?;
    let mask = if cols[5] == "-" && cols[6] == "-" {
        None
    } else {
        let dims: Vec<usize> = cols[5]
            .split(' ')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(format!("bad raster size {:?}", cols[5])))?;
        if dims.len() != 2 {
            return Err(err(format!("raster size needs `H W`, got {:?}", cols[5])));
        }
        let counts: Vec<u32> = if cols[6].is_empty() {
            Vec::new()
        } else {
            cols[6]
                .split(',')
                .map(|s| s.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err("bad RLE counts".to_string()))?
        };
        Some(Rle {
            height: dims[0],
            width: dims[1],
            counts,
        })
    };
    Ok(TrackedMask {
        video_id: cols[0].to_string(),
        frame,
        track_id,
        bbox: BBox::new(nums[0], nums[1], nums[2], nums[3]),
        confidence,
        mask,
    })
}

/// Parses track records from text; `path` is only used in error messages.
pub fn parse_tracks(path: &Path, text: &str, require_masks: bool) -> Result<TrackSet> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_line(path, i + 1, line)?;
        if require_masks && rec.mask.is_none() {
            return Err(Error::parse(
                path,
                i + 1,
                "mask is required in a tracks file",
            ));
        }
        rec.validate().map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}:{}: {m}", path.display(), i + 1)),
            other => other,
        })?;
        records.push(rec);
    }
    TrackSet::new(records)
}

/// Loads a tracks file. Every record must carry a mask.
pub fn load_tracks(path: &Path) -> Result<TrackSet> {
    parse_tracks(path, &read_to_string(path)?, true)
}

/// Loads keyframe annotations (masks optional, `gt_` id prefix accepted).
pub fn load_keyframes(path: &Path) -> Result<TrackSet> {
    parse_tracks(path, &read_to_string(path)?, false)
}

/// Canonical text form; `gt_ids` prefixes every id with `gt_`.
pub fn serialize_tracks(tracks: &TrackSet, gt_ids: bool) -> String {
    let mut out = String::new();
    for r in tracks.records() {
        let prefix = if gt_ids { "gt_" } else { "" };
        let _ = write!(
            out,
            "{}\t{}\t{}{}\t{} {} {} {}\t{}\t",
            r.video_id,
            r.frame,
            prefix,
            r.track_id,
            r.bbox.x,
            r.bbox.y,
            r.bbox.w,
            r.bbox.h,
            r.confidence
        );
        match &r.mask {
            Some(m) => {
                let counts: Vec<String> = m.counts.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "{} {}\t{}", m.height, m.width, counts.join(","));
            }
            None => out.push_str("-\t-\n"),
        }
    }
    out
}

pub fn write_tracks(path: &Path, tracks: &TrackSet, gt_ids: bool) -> Result<()> {
    write_atomic(path, serialize_tracks(tracks, gt_ids).as_bytes())
}
