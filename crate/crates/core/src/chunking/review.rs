use super::{BoundaryMatch, ChunkPlan};
use crate::dataset::{read_to_string, write_atomic, TrackSet, TrackedMask};
use crate::error::{Error, Result};
use crate::features::shape::LocalMask;
use image::GrayImage;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::io::Cursor;
use std::path::Path;

pub const REVIEW_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewManifest {
    pub schema_version: u32,
    pub video_id: String,
    pub tau_match: f64,
    pub boundaries: Vec<ReviewBoundary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewBoundary {
    pub boundary_frame: u32,
    pub warning: bool,
    pub proposals: Vec<ReviewProposal>,
}

/// One next-chunk track and the previous-chunk track it was paired with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewProposal {
    pub track_id: i64,
    pub matched_prev_track_id: Option<i64>,
    pub iou: f64,
    pub flag: bool,
    /// Paths relative to the bundle directory.
    pub crop_prev: Option<String>,
    pub crop_next: String,
    pub crop_missing: bool,
}

impl ReviewManifest {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| {
            Err(Error::Validation(format!(
                "review manifest for {}: {m}",
                self.video_id
            )))
        };
        if self.schema_version != REVIEW_SCHEMA_VERSION {
            return fail(format!(
                "unsupported schema_version {}",
                self.schema_version
            ));
        }
        if self
            .boundaries
            .windows(2)
            .any(|w| w[0].boundary_frame >= w[1].boundary_frame)
        {
            return fail("boundaries are not strictly ascending".into());
        }
        for b in &self.boundaries {
            let mut seen = BTreeSet::new();
            for p in &b.proposals {
                if !seen.insert(p.track_id) {
                    return fail(format!(
                        "track {} listed twice at boundary {}",
                        p.track_id, b.boundary_frame
                    ));
                }
                if !(0.0..=1.0).contains(&p.iou) {
                    return fail(format!("iou {} outside [0, 1]", p.iou));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }
}

pub fn load_review_manifest(path: &Path) -> Result<ReviewManifest> {
    let m: ReviewManifest = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    m.validate()?;
    Ok(m)
}

/// Supplies the image shown for a track at a frame.
pub trait CropSource {
    fn crop(&self, video_id: &str, frame: u32, track_id: i64) -> Option<GrayImage>;
}

/// Placeholder crops rendered from the masks themselves, for use when video
/// frames are not at hand.
pub struct MaskCrops<'a> {
    index: HashMap<(&'a str, u32, i64), &'a TrackedMask>,
}

impl<'a> MaskCrops<'a> {
    pub fn new(tracks: &'a TrackSet) -> Self {
        MaskCrops {
            index: tracks
                .records()
                .iter()
                .map(|r| ((r.video_id.as_str(), r.frame, r.track_id), r))
                .collect(),
        }
    }
}

impl CropSource for MaskCrops<'_> {
    fn crop(&self, video_id: &str, frame: u32, track_id: i64) -> Option<GrayImage> {
        let rec = self.index.get(&(video_id, frame, track_id))?;
        let local = LocalMask::from_rle(rec.mask.as_ref()?)?;
        let pad = 2;
        let (w, h) = (local.mask.width() as u32, local.mask.height() as u32);
        Some(GrayImage::from_fn(w + 2 * pad, h + 2 * pad, |x, y| {
            let on = x >= pad
                && y >= pad
                && x < w + pad
                && y < h + pad
                && local.mask.get((x - pad) as usize, (y - pad) as usize);
            image::Luma([if on { 255 } else { 0 }])
        }))
    }
}

fn write_png(path: &Path, img: &GrayImage) -> Result<()> {
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)?;
    write_atomic(path, &bytes)
}

/// Writes `manifest.json` and `crops/*.png` under `dir`. Previous-chunk crops
/// show the frame before the boundary, next-chunk crops the boundary frame.
pub fn export_review_bundle(
    dir: &Path,
    plan: &ChunkPlan,
    matches: &[BoundaryMatch],
    crops: &dyn CropSource,
    tau_match: f64,
) -> Result<ReviewManifest> {
    let mut boundaries = Vec::with_capacity(matches.len());
    for m in matches {
        if !plan.boundaries.contains(&m.boundary_frame) {
            return Err(Error::Validation(format!(
                "match at frame {} is not a boundary of the plan for {}",
                m.boundary_frame, plan.video_id
            )));
        }
        let b = m.boundary_frame;
        let mut next_ids: Vec<i64> = m
            .flags
            .iter()
            .copied()
            .chain(m.assignment.iter().map(|p| p.next_track_id))
            .collect();
        next_ids.sort_unstable();
        next_ids.dedup();
        let render = |name: String, frame: u32, track: i64| -> Result<(String, bool)> {
            let rel = format!("crops/{name}.png");
            if let Some(img) = crops.crop(&plan.video_id, frame, track) {
                write_png(&dir.join(&rel), &img)?;
            }
            let present = dir.join(&rel).is_file();
            Ok((rel, present))
        };
        let mut proposals = Vec::with_capacity(next_ids.len());
        for id in next_ids {
            let pair = m.proposal_for(id);
            let (crop_next, next_ok) = render(format!("{b}_next_{id}"), b, id)?;
            let (crop_prev, prev_ok) = match pair {
                Some(p) => {
                    let (path, ok) = render(
                        format!("{b}_prev_{}", p.prev_track_id),
                        b.saturating_sub(1),
                        p.prev_track_id,
                    )?;
                    (Some(path), ok)
                }
                None => (None, true),
            };
            proposals.push(ReviewProposal {
                track_id: id,
                matched_prev_track_id: pair.map(|p| p.prev_track_id),
                iou: pair.map_or(0.0, |p| p.iou),
                flag: m.is_flagged(id),
                crop_prev,
                crop_next,
                crop_missing: !(next_ok && prev_ok),
            });
        }
        boundaries.push(ReviewBoundary {
            boundary_frame: b,
            warning: plan.warnings.contains(&b),
            proposals,
        });
    }
    boundaries.sort_by_key(|b| b.boundary_frame);
    let manifest = ReviewManifest {
        schema_version: REVIEW_SCHEMA_VERSION,
        video_id: plan.video_id.clone(),
        tau_match,
        boundaries,
    };
    manifest.validate()?;
    write_atomic(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunking::{boundary_masks, match_identities};
    use crate::dataset::BinaryMask;

    fn tracks() -> TrackSet {
        let mut recs = Vec::new();
        for frame in [1499, 1500] {
            for (id, x0) in [(1, 0), (2, 30), (3, 60)] {
                let m = BinaryMask::from_fn(100, 40, |x, y| {
                    (x0..x0 + 15).contains(&x) && (5..20).contains(&y)
                });
                recs.push(TrackedMask::from_mask("v", frame, id, 0.9, m.encode()));
            }
        }
        TrackSet::new(recs).unwrap()
    }

    fn plan() -> ChunkPlan {
        ChunkPlan {
            video_id: "v".into(),
            grounding_frame: 0,
            chunk_len_nominal: 1500,
            delta: 125,
            boundaries: vec![1500],
            warnings: vec![],
            prompts: vec![],
        }
    }

    #[test]
    fn one_boundary_three_proposals() {
        let t = tracks();
        let m = match_identities(
            1500,
            &boundary_masks(&t, "v", 1499),
            &boundary_masks(&t, "v", 1500),
            0.3,
        );
        let dir = tempfile::tempdir().unwrap();
        let manifest =
            export_review_bundle(dir.path(), &plan(), &[m], &MaskCrops::new(&t), 0.3).unwrap();
        assert_eq!(manifest.boundaries.len(), 1);
        assert_eq!(manifest.boundaries[0].proposals.len(), 3);
        assert!(manifest.boundaries[0]
            .proposals
            .iter()
            .all(|p| !p.flag && !p.crop_missing));
        let back = load_review_manifest(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, manifest);
        let png = image::open(dir.path().join("crops/1500_next_2.png")).unwrap();
        assert_eq!((png.width(), png.height()), (19, 19));
    }

    struct NoCrops;
    impl CropSource for NoCrops {
        fn crop(&self, _: &str, _: u32, _: i64) -> Option<GrayImage> {
            None
        }
    }

    #[test]
    fn flagged_and_missing_crops_are_marked() {
        let t = tracks();
        let prev = boundary_masks(&t, "v", 1499);
        let m = match_identities(1500, &prev[..2], &boundary_masks(&t, "v", 1500), 0.3);
        let dir = tempfile::tempdir().unwrap();
        let manifest = export_review_bundle(dir.path(), &plan(), &[m], &NoCrops, 0.3).unwrap();
        let props = &manifest.boundaries[0].proposals;
        assert!(props.iter().all(|p| p.crop_missing));
        let third = props.iter().find(|p| p.track_id == 3).unwrap();
        assert!(third.flag);
        assert_eq!(third.matched_prev_track_id, None);
        assert!(manifest.to_json().contains("\"flag\": true"));
    }

    #[test]
    fn schema_violation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        std::fs::write(
            &p,
            r#"{"schema_version": 1, "video_id": "v", "tau_match": 0.3}"#,
        )
        .unwrap();
        let err = load_review_manifest(&p).unwrap_err();
        assert!(err.to_string().contains("boundaries"), "{err}");
    }
}
