//! On-disk artefacts: tracks, labels, embeddings, manifests and feature tables.

pub mod embeddings;
pub mod features_io;
pub mod labels;
pub mod manifest;
pub mod rle;
pub mod tracks;

pub use embeddings::{load_embeddings, write_embeddings, EmbeddingBundle, EmbeddingSequence};
pub use labels::{load_labels, Behaviour, Category, LabelWindow, WindowKey};
pub use manifest::{load_manifest, BirdEntry, DatasetManifest, VideoEntry};
pub use rle::{BBox, BinaryMask, Rle};
pub use tracks::{load_tracks, write_tracks, TrackSet, TrackedMask};

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Frames per second of every recording.
pub const FPS: f64 = 25.0;
/// Length of one scoring window in frames (5 s at 25 fps).
pub const WINDOW_FRAMES: u32 = 125;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to `path` through a temporary sibling file and a rename,
/// so readers never observe a half-written artefact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
