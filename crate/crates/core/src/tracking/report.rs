use super::{
    build_instances, hota, idf1, HotaScores, IdScores, SimilarityMode, SimilarityUse,
    VideoInstance, ALPHAS,
};
use crate::dataset::TrackSet;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two videos.
    pub sd: Option<f64>,
    pub n: usize,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len();
        let mean = if n == 0 {
            0.0
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let sd = (n >= 2).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        MeanSd { mean, sd, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoScores {
    pub video_id: String,
    pub keyframes: usize,
    pub similarity: SimilarityMode,
    pub hota: HotaScores,
    pub identity: IdScores,
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingRow {
    pub method: String,
    pub hota_mean: f64,
    pub hota_sd: Option<f64>,
    pub idf1_mean: f64,
    pub idf1_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingReport {
    pub method: String,
    pub similarity: SimilarityMode,
    pub idf1_threshold: f64,
    pub alphas: Vec<f64>,
    pub videos: Vec<VideoScores>,
    pub hota: MeanSd,
    pub idf1: MeanSd,
    pub rows: Vec<TrackingRow>,
}

impl TrackingReport {
    pub fn from_instances(
        method: &str,
        instances: &[VideoInstance],
        idf1_threshold: f64,
    ) -> Result<Self> {
        let usable: Vec<&VideoInstance> = instances
            .iter()
            .filter(|v| {
                if v.frame_count() == 0 {
                    log::warn!("video {} has no annotated keyframes; excluded", v.video_id);
                }
                v.frame_count() > 0
            })
            .collect();
        if usable.is_empty() {
            return Err(Error::Degenerate("no video has annotated keyframes".into()));
        }
        let videos: Vec<VideoScores> = usable
            .par_iter()
            .map(|v| VideoScores {
                video_id: v.video_id.clone(),
                keyframes: v.frame_count(),
                similarity: v.similarity.mode(),
                hota: hota(v),
                identity: idf1(v, idf1_threshold),
            })
            .collect();
        let similarity = usable
            .iter()
            .fold(SimilarityUse::default(), |a, v| a.merge(v.similarity))
            .mode();
        let h = MeanSd::of(&videos.iter().map(|v| v.hota.hota).collect::<Vec<_>>());
        let i = MeanSd::of(&videos.iter().map(|v| v.identity.idf1).collect::<Vec<_>>());
        Ok(TrackingReport {
            method: method.to_string(),
            similarity,
            idf1_threshold,
            alphas: ALPHAS.to_vec(),
            videos,
            hota: h,
            idf1: i,
            rows: vec![TrackingRow {
                method: method.to_string(),
                hota_mean: h.mean,
                hota_sd: h.sd,
                idf1_mean: i.mean,
                idf1_sd: i.sd,
            }],
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Scores predictions against keyframe annotations, one entry per annotated
/// video plus an unweighted mean and sample SD across videos.
pub fn evaluate_tracking(
    gt: &TrackSet,
    pred: &TrackSet,
    method: &str,
    idf1_threshold: f64,
) -> Result<TrackingReport> {
    TrackingReport::from_instances(method, &build_instances(gt, pred), idf1_threshold)
}
