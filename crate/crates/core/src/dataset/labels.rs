//! Ethogram labels scored in fixed 5 s windows.

use super::WINDOW_FRAMES;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Play category; `Other` is non-play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Other,
    Object,
    Locomotor,
    Social,
}

impl Category {
    /// Classes used for training, in class-index order.
    pub const TRAINED: [Category; 3] = [Category::Other, Category::Object, Category::Locomotor];

    /// Index into the 3-class problem; `None` for the excluded social category.
    pub fn class_index(self) -> Option<usize> {
        match self {
            Category::Other => Some(0),
            Category::Object => Some(1),
            Category::Locomotor => Some(2),
            Category::Social => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Other => "other",
            Category::Object => "object",
            Category::Locomotor => "locomotor",
            Category::Social => "social",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fine-grained ethogram sub-behaviour, or `None` for a window without play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Behaviour {
    None,
    Frolicking,
    WingFlapping,
    Running,
    Spinning,
    SpinningWhileWingFlapping,
    WormPecking,
    ObjectRunning,
    WormRunning,
    ObjectWormChasing,
    ObjectWormExchange,
    SparringJumpingNoContact,
    SparringJumpingWithContact,
    SparringStandOffNoContact,
    SparringStandOffWithContact,
}

impl Behaviour {
    pub const ALL: [Behaviour; 15] = [
        Behaviour::None,
        Behaviour::Frolicking,
        Behaviour::WingFlapping,
        Behaviour::Running,
        Behaviour::Spinning,
        Behaviour::SpinningWhileWingFlapping,
        Behaviour::WormPecking,
        Behaviour::ObjectRunning,
        Behaviour::WormRunning,
        Behaviour::ObjectWormChasing,
        Behaviour::ObjectWormExchange,
        Behaviour::SparringJumpingNoContact,
        Behaviour::SparringJumpingWithContact,
        Behaviour::SparringStandOffNoContact,
        Behaviour::SparringStandOffWithContact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Behaviour::None => "none",
            Behaviour::Frolicking => "Frolicking",
            Behaviour::WingFlapping => "Wing flapping",
            Behaviour::Running => "Running",
            Behaviour::Spinning => "Spinning",
            Behaviour::SpinningWhileWingFlapping => "Spinning while wing flapping",
            Behaviour::WormPecking => "Worm pecking",
            Behaviour::ObjectRunning => "Object running",
            Behaviour::WormRunning => "Worm running",
            Behaviour::ObjectWormChasing => "Object/worm chasing",
            Behaviour::ObjectWormExchange => "Object/worm exchange",
            Behaviour::SparringJumpingNoContact => "Sparring jumping, no contact",
            Behaviour::SparringJumpingWithContact => "Sparring jumping, with contact",
            Behaviour::SparringStandOffNoContact => "Sparring stand-off, no contact",
            Behaviour::SparringStandOffWithContact => "Sparring stand-off, with contact",
        }
    }

    pub fn category(self) -> Category {
        use Behaviour::*;
        match self {
            None => Category::Other,
            Frolicking | WingFlapping | Running | Spinning | SpinningWhileWingFlapping => {
                Category::Locomotor
            }
            WormPecking | ObjectRunning | WormRunning | ObjectWormChasing | ObjectWormExchange => {
                Category::Object
            }
            SparringJumpingNoContact
            | SparringJumpingWithContact
            | SparringStandOffNoContact
            | SparringStandOffWithContact => Category::Social,
        }
    }
}

impl fmt::Display for Behaviour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Behaviour {
    type Err = Error;

    /// Case-insensitive match on the ethogram names.
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        Behaviour::ALL
            .iter()
            .copied()
            .find(|b| b.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| {
                let legal: Vec<&str> = Behaviour::ALL.iter().map(|b| b.name()).collect();
                Error::Validation(format!(
                    "unknown behaviour {wanted:?}; expected one of: {}",
                    legal.join("; ")
                ))
            })
    }
}

/// Identifies one bird's scoring window.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WindowKey {
    pub video_id: String,
    pub bird_id: i64,
    pub start_frame: u32,
}

impl WindowKey {
    pub fn new(video_id: &str, bird_id: i64, start_frame: u32) -> Self {
        WindowKey {
            video_id: video_id.to_string(),
            bird_id,
            start_frame,
        }
    }
}

impl fmt::Display for WindowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.video_id, self.bird_id, self.start_frame)
    }
}

impl FromStr for WindowKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("bad window key {s:?}, expected video:bird:start"));
        let mut parts = s.rsplitn(3, ':');
        let start = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let bird = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let video = parts.next().ok_or_else(bad)?;
        Ok(WindowKey::new(video, bird, start))
    }
}

/// One scored window for one bird.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelWindow {
    pub video_id: String,
    pub bird_id: i64,
    pub start_frame: u32,
    pub end_frame: u32,
    pub behaviour: Behaviour,
    pub category: Category,
    /// Set for social-play windows, which are kept on load but never trained on.
    pub excluded: bool,
}

impl LabelWindow {
    pub fn new(video_id: &str, bird_id: i64, start_frame: u32, behaviour: Behaviour) -> Self {
        let category = behaviour.category();
        LabelWindow {
            video_id: video_id.to_string(),
            bird_id,
            start_frame,
            end_frame: start_frame + WINDOW_FRAMES,
            behaviour,
            category,
            excluded: category == Category::Social,
        }
    }

    pub fn key(&self) -> WindowKey {
        WindowKey::new(&self.video_id, self.bird_id, self.start_frame)
    }
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    video_id: String,
    bird_id: i64,
    start_frame: u32,
    end_frame: u32,
    behaviour: String,
}

/// Parses the labels CSV (`video_id,bird_id,start_frame,end_frame,behaviour`).
pub fn parse_labels(path: &Path, text: &str) -> Result<Vec<LabelWindow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let expected = [
        "video_id",
        "bird_id",
        "start_frame",
        "end_frame",
        "behaviour",
    ];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(
            path,
            1,
            format!("header must be {}", expected.join(",")),
        ));
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, row) in reader.deserialize::<LabelRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let behaviour: Behaviour = row.behaviour.parse().map_err(|e: Error| match e {
            Error::Validation(m) => Error::parse(path, line, m),
            other => other,
        })?;
        if row.end_frame != row.start_frame + WINDOW_FRAMES {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "window [{}, {}) is not {WINDOW_FRAMES} frames long",
                    row.start_frame, row.end_frame
                ),
            ));
        }
        if row.start_frame % WINDOW_FRAMES != 0 {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "window start {} is not aligned to a 5 s boundary",
                    row.start_frame
                ),
            ));
        }
        let w = LabelWindow::new(&row.video_id, row.bird_id, row.start_frame, behaviour);
        if !seen.insert(w.key()) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate window {}", w.key()),
            ));
        }
        out.push(w);
    }
    out.sort_by_key(|a| a.key());
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelWindow>> {
    parse_labels(path, &super::read_to_string(path)?)
}

pub fn serialize_labels(labels: &[LabelWindow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "video_id",
        "bird_id",
        "start_frame",
        "end_frame",
        "behaviour",
    ])
    .expect("in-memory write");
    for l in labels {
        w.write_record([
            l.video_id.clone(),
            l.bird_id.to_string(),
            l.start_frame.to_string(),
            l.end_frame.to_string(),
            l.behaviour.name().to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

pub fn category_histogram(labels: &[LabelWindow]) -> BTreeMap<Category, usize> {
    let mut h = BTreeMap::new();
    for l in labels {
        *h.entry(l.category).or_insert(0) += 1;
    }
    h
}
