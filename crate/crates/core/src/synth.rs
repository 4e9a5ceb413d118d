//! Scripted-kinematics fixtures: elliptical birds moving in one of three
//! regimes per window (stationary, straight run with wall bounces, erratic),
//! labelled other / object / locomotor respectively.

use crate::dataset::labels::serialize_labels;
use crate::dataset::manifest::write_manifest;
use crate::dataset::tracks::write_tracks;
use crate::dataset::{
    write_atomic, Behaviour, BirdEntry, DatasetManifest, EmbeddingBundle, EmbeddingSequence,
    LabelWindow, Rle, TrackSet, TrackedMask, VideoEntry, FPS, WINDOW_FRAMES,
};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Stationary,
    Run,
    Erratic,
}

impl Regime {
    pub fn behaviour(self) -> Behaviour {
        match self {
            Regime::Stationary => Behaviour::None,
            Regime::Run => Behaviour::ObjectRunning,
            Regime::Erratic => Behaviour::Frolicking,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub cages: u32,
    pub birds_per_cage: u32,
    pub windows_per_bird: u32,
    pub width: usize,
    pub height: usize,
    /// Keeps every mask this far from the raster edge.
    pub margin: f64,
    /// Semi-axes of the body ellipse in pixels.
    pub body: (f64, f64),
    /// Relative frequency of stationary, run and erratic windows.
    pub mix: [f64; 3],
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            cages: 1,
            birds_per_cage: 3,
            windows_per_bird: 180,
            width: 320,
            height: 240,
            margin: 24.0,
            body: (9.0, 5.0),
            mix: [0.5, 0.25, 0.25],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    pub tracks: TrackSet,
    pub labels: Vec<LabelWindow>,
    pub regimes: Vec<Regime>,
}

pub fn video_id(cage: u32) -> String {
    format!("cage{cage}_day1")
}

pub fn bird_id(cage: u32, index: u32) -> i64 {
    i64::from(cage) * 10 + i64::from(index) + 1
}

/// Foreground runs of a filled ellipse, built column by column without
/// materialising the raster.
pub fn ellipse_rle(
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    theta: f64,
) -> Rle {
    let (s, c) = theta.sin_cos();
    let r = a.max(b).ceil() as i64 + 1;
    let inside = |x: i64, y: i64| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let u = (dx * c + dy * s) / a;
        let v = (-dx * s + dy * c) / b;
        u * u + v * v <= 1.0
    };
    let mut runs: Vec<(u64, u64)> = Vec::new();
    let (x0, x1) = (
        (cx.round() as i64 - r).max(0),
        (cx.round() as i64 + r).min(width as i64 - 1),
    );
    let (y0, y1) = (
        (cy.round() as i64 - r).max(0),
        (cy.round() as i64 + r).min(height as i64 - 1),
    );
    for x in x0..=x1 {
        let mut start = None;
        for y in y0..=y1 + 1 {
            let on = y <= y1 && inside(x, y);
            let idx = x as u64 * height as u64 + y as u64;
            match (on, start) {
                (true, None) => start = Some(idx),
                (false, Some(s0)) => {
                    runs.push((s0, idx));
                    start = None;
                }
                _ => {}
            }
        }
    }
    rle_from_runs(width, height, &runs)
}

fn rle_from_runs(width: usize, height: usize, runs: &[(u64, u64)]) -> Rle {
    let total = (width * height) as u64;
    let mut counts = Vec::with_capacity(runs.len() * 2 + 1);
    let mut pos = 0u64;
    let mut fg_end = None::<u64>;
    for &(s, e) in runs {
        match fg_end {
            Some(end) if end == s => {
                *counts.last_mut().expect("open run") += (e - s) as u32;
            }
            _ => {
                counts.push((s - pos) as u32);
                counts.push((e - s) as u32);
            }
        }
        pos = e;
        fg_end = Some(e);
    }
    counts.push((total - pos) as u32);
    Rle {
        height,
        width,
        counts,
    }
}

/// Shifts a mask by whole pixels inside the same raster.
pub fn translate_rle(rle: &Rle, dx: i64, dy: i64) -> Result<Rle> {
    let h = rle.height as i64;
    let mut runs = Vec::new();
    for (s, e) in rle.foreground_runs() {
        let mut i = s as i64;
        while i < e as i64 {
            let (x, y) = (i / h, i % h);
            let len = (h - y).min(e as i64 - i);
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || nx >= rle.width as i64 || ny < 0 || ny + len > h {
                return Err(Error::Validation(format!(
                    "translation by ({dx}, {dy}) leaves the raster"
                )));
            }
            let ns = (nx * h + ny) as u64;
            runs.push((ns, ns + len as u64));
            i += len;
        }
    }
    runs.sort_unstable();
    Ok(rle_from_runs(rle.width, rle.height, &runs))
}

pub fn translate_tracks(tracks: &TrackSet, dx: i64, dy: i64) -> Result<TrackSet> {
    let records = tracks
        .records()
        .iter()
        .map(|r| {
            let mask = r
                .mask
                .as_ref()
                .ok_or_else(|| Error::Validation("box-only record".into()))?;
            Ok(TrackedMask::from_mask(
                &r.video_id,
                r.frame,
                r.track_id,
                r.confidence,
                translate_rle(mask, dx, dy)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    TrackSet::new(records)
}

struct Body {
    x: f64,
    y: f64,
    heading: f64,
}

fn draw_regime(rng: &mut impl Rng, mix: &[f64; 3]) -> Regime {
    let total: f64 = mix.iter().sum();
    let u = rng.gen::<f64>() * total;
    if u < mix[0] {
        Regime::Stationary
    } else if u < mix[0] + mix[1] {
        Regime::Run
    } else {
        Regime::Erratic
    }
}

/// Advances one frame and returns the body orientation to draw.
fn step(
    body: &mut Body,
    regime: Regime,
    rng: &mut impl Rng,
    lo: (f64, f64),
    hi: (f64, f64),
) -> f64 {
    let (speed, turn) = match regime {
        Regime::Stationary => (rng.gen_range(0.0..0.15), rng.gen_range(-0.02..0.02)),
        Regime::Run => (3.0, 0.0),
        Regime::Erratic => (rng.gen_range(0.5..5.0), rng.gen_range(-1.4..1.4)),
    };
    body.heading = (body.heading + turn).rem_euclid(TAU);
    body.x += speed * body.heading.cos();
    body.y += speed * body.heading.sin();
    if body.x < lo.0 || body.x > hi.0 {
        body.x = body.x.clamp(lo.0, hi.0);
        body.heading = (PI - body.heading).rem_euclid(TAU);
    }
    if body.y < lo.1 || body.y > hi.1 {
        body.y = body.y.clamp(lo.1, hi.1);
        body.heading = (-body.heading).rem_euclid(TAU);
    }
    body.heading
}

/// One video per cage with `birds_per_cage` birds and
/// `windows_per_bird` consecutive scoring windows each.
pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    if cfg.cages == 0 || cfg.birds_per_cage == 0 || cfg.windows_per_bird == 0 {
        return Err(Error::Config(
            "synthetic dataset needs at least one cage, bird and window".into(),
        ));
    }
    let frames = cfg.windows_per_bird * WINDOW_FRAMES;
    let lo = (cfg.margin, cfg.margin);
    let hi = (
        cfg.width as f64 - cfg.margin,
        cfg.height as f64 - cfg.margin,
    );
    if hi.0 <= lo.0 || hi.1 <= lo.1 {
        return Err(Error::Config("margin leaves no room in the raster".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut videos = Vec::new();
    let mut birds = Vec::new();
    let mut records = Vec::new();
    let mut labels = Vec::new();
    let mut regimes = Vec::new();
    for cage in 1..=cfg.cages {
        let vid = video_id(cage);
        videos.push(VideoEntry {
            video_id: vid.clone(),
            fps: FPS,
            frame_count: frames,
            cage_id: cage,
            day: 1,
        });
        for b in 0..cfg.birds_per_cage {
            let id = bird_id(cage, b);
            birds.push(BirdEntry {
                bird_id: id,
                cage_id: cage,
            });
            let mut body = Body {
                x: rng.gen_range(lo.0..hi.0),
                y: rng.gen_range(lo.1..hi.1),
                heading: rng.gen_range(0.0..TAU),
            };
            for w in 0..cfg.windows_per_bird {
                let regime = draw_regime(&mut rng, &cfg.mix);
                let start = w * WINDOW_FRAMES;
                labels.push(LabelWindow::new(&vid, id, start, regime.behaviour()));
                regimes.push(regime);
                for f in start..start + WINDOW_FRAMES {
                    let theta = step(&mut body, regime, &mut rng, lo, hi);
                    let mask = ellipse_rle(
                        cfg.width, cfg.height, body.x, body.y, cfg.body.0, cfg.body.1, theta,
                    );
                    records.push(TrackedMask::from_mask(&vid, f, id, 1.0, mask));
                }
            }
        }
    }
    Ok(SynthDataset {
        manifest: DatasetManifest::new(videos, birds)?,
        tracks: TrackSet::new(records)?,
        labels,
        regimes,
    })
}

/// Stand-in backbone output: `f_w` tokens per window, each a noisy random
/// projection of the token's mean absolute velocity, speed and net
/// displacement per frame.
pub fn synthetic_embeddings(
    data: &SynthDataset,
    f_w: usize,
    d: usize,
    seed: u64,
) -> Result<EmbeddingBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proj: Vec<[f64; 4]> = (0..d)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        .collect();
    let tracks = centres(&data.tracks);
    let mut sequences = Vec::with_capacity(data.labels.len());
    for l in &data.labels {
        let centres: Vec<(f64, f64)> = (l.start_frame..l.end_frame)
            .map(|f| {
                tracks
                    .get(&(l.video_id.clone(), l.bird_id, f))
                    .copied()
                    .unwrap_or((0.0, 0.0))
            })
            .collect();
        let per = (centres.len() / f_w).max(2);
        let mut tokens = Vec::with_capacity(f_w * d);
        for t in 0..f_w {
            let lo = (t * per).min(centres.len() - 2);
            let seg = &centres[lo..(lo + per).min(centres.len())];
            let (mut vx, mut vy, mut sp) = (0.0, 0.0, 0.0);
            for p in seg.windows(2) {
                let (dx, dy) = (p[1].0 - p[0].0, p[1].1 - p[0].1);
                vx += dx.abs();
                vy += dy.abs();
                sp += dx.hypot(dy);
            }
            let n = (seg.len() - 1) as f64;
            let (first, last) = (seg[0], seg[seg.len() - 1]);
            let net = (last.0 - first.0).hypot(last.1 - first.1) / n;
            let v = [vx / n, vy / n, sp / n, net];
            for p in &proj {
                let val: f64 =
                    p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-0.1..0.1);
                tokens.push(val as f32);
            }
        }
        sequences.push(EmbeddingSequence::new(l.key(), f_w, d, tokens)?);
    }
    Ok(EmbeddingBundle {
        backbone_id: "synthetic".into(),
        k_in: 1,
        sequences,
    })
}

fn centres(tracks: &TrackSet) -> HashMap<(String, i64, u32), (f64, f64)> {
    tracks
        .records()
        .iter()
        .map(|r| ((r.video_id.clone(), r.track_id, r.frame), r.bbox.center()))
        .collect()
}

/// Writes `tracks.tsv`, `labels.csv`, `videos.csv` and `birds.csv`.
pub fn write_fixture(dir: &Path, data: &SynthDataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_tracks(&dir.join("tracks.tsv"), &data.tracks, false)?;
    write_atomic(
        &dir.join("labels.csv"),
        serialize_labels(&data.labels).as_bytes(),
    )?;
    write_manifest(
        &dir.join("videos.csv"),
        &dir.join("birds.csv"),
        &data.manifest,
    )
}
