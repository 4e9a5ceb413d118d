//! Recording and housing metadata.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u32,
    pub cage_id: u32,
    pub day: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirdEntry {
    pub bird_id: i64,
    pub cage_id: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub videos: Vec<VideoEntry>,
    pub birds: Vec<BirdEntry>,
}

impl DatasetManifest {
    pub fn new(mut videos: Vec<VideoEntry>, mut birds: Vec<BirdEntry>) -> Result<Self> {
        videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        birds.sort_by_key(|b| b.bird_id);
        for pair in videos.windows(2) {
            if pair[0].video_id == pair[1].video_id {
                return Err(Error::Validation(format!(
                    "video {} listed twice in manifest",
                    pair[0].video_id
                )));
            }
        }
        for pair in birds.windows(2) {
            if pair[0].bird_id == pair[1].bird_id {
                return Err(Error::Validation(format!(
                    "bird {} listed twice in manifest",
                    pair[0].bird_id
                )));
            }
        }
        for v in &videos {
            if !(v.fps > 0.0) || v.cage_id == 0 {
                return Err(Error::Validation(format!(
                    "video {}: fps must be positive and cage ids start at 1",
                    v.video_id
                )));
            }
        }
        Ok(DatasetManifest { videos, birds })
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoEntry> {
        self.videos
            .binary_search_by(|v| v.video_id.as_str().cmp(video_id))
            .ok()
            .map(|i| &self.videos[i])
    }

    pub fn cage_of_video(&self, video_id: &str) -> Option<u32> {
        self.video(video_id).map(|v| v.cage_id)
    }

    /// Distinct cage ids in ascending order.
    pub fn cages(&self) -> Vec<u32> {
        self.videos
            .iter()
            .map(|v| v.cage_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn videos_by_cage(&self) -> BTreeMap<u32, Vec<String>> {
        let mut out: BTreeMap<u32, Vec<String>> = BTreeMap::new();
        for v in &self.videos {
            out.entry(v.cage_id).or_default().push(v.video_id.clone());
        }
        out
    }
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let text = super::read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::parse(
            path,
            1,
            format!("header must be {}", header.join(",")),
        ));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse(path, i + 2, e.to_string())))
        .collect()
}

/// Loads the `video_id,fps,frame_count,cage_id,day` and `bird_id,cage_id` tables.
pub fn load_manifest(videos_path: &Path, birds_path: &Path) -> Result<DatasetManifest> {
    let videos = read_csv(
        videos_path,
        &["video_id", "fps", "frame_count", "cage_id", "day"],
    )?;
    let birds = read_csv(birds_path, &["bird_id", "cage_id"])?;
    DatasetManifest::new(videos, birds)
}

pub fn write_manifest(videos_path: &Path, birds_path: &Path, m: &DatasetManifest) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for v in &m.videos {
        w.serialize(v).expect("in-memory write");
    }
    super::write_atomic(videos_path, &w.into_inner().expect("flush"))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in &m.birds {
        w.serialize(b).expect("in-memory write");
    }
    super::write_atomic(birds_path, &w.into_inner().expect("flush"))
}
