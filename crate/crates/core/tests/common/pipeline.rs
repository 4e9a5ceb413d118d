//! Synthetic-fixture pipeline checks shared by the integration and
//! acceptance targets.

use playclass::dataset::{BinaryMask, WINDOW_FRAMES};
use playclass::features::{
    extract_features, frame_spatial_features, FeatureConfig, WindowFeatureVector, VECTOR_LEN,
};
use playclass::loco::{run_loco, LocoData, RunResult, RunSpec};
use playclass::synth::{generate, translate_tracks, SynthConfig, SynthDataset};
use std::collections::BTreeMap;

#[derive(Debug)]
pub struct FeatureCheck {
    pub frames: u32,
    pub windows_per_bird: BTreeMap<i64, usize>,
    pub all_vectors_171: bool,
    pub square_circularity: f64,
    pub disc_circularity: f64,
    pub translation_bitwise: bool,
}

pub fn same_bits(a: &[WindowFeatureVector], b: &[WindowFeatureVector]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.key == y.key
                && x.low_coverage == y.low_coverage
                && x.values.len() == y.values.len()
                && x.values
                    .iter()
                    .zip(&y.values)
                    .all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

pub fn disc_and_square_circularity() -> (f64, f64) {
    let square = BinaryMask::from_fn(120, 120, |x, y| {
        (10..110).contains(&x) && (10..110).contains(&y)
    });
    let disc = BinaryMask::from_fn(128, 128, |x, y| {
        let (dx, dy) = (x as f64 - 64.0, y as f64 - 64.0);
        dx * dx + dy * dy <= 50.0 * 50.0
    });
    (
        frame_spatial_features(&square.encode())
            .unwrap()
            .circularity,
        frame_spatial_features(&disc.encode()).unwrap().circularity,
    )
}

/// Full-size fixture: 3 birds, 180 windows each, 22,500 frames.
pub fn feature_fixture_check() -> FeatureCheck {
    let data = generate(&SynthConfig::default()).unwrap();
    let cfg = FeatureConfig::default();
    let features = extract_features(&data.tracks, &data.labels, &cfg);
    let moved = translate_tracks(&data.tracks, 7, -5).unwrap();
    let moved_features = extract_features(&moved, &data.labels, &cfg);
    let mut windows_per_bird = BTreeMap::new();
    for f in &features {
        *windows_per_bird.entry(f.key.bird_id).or_insert(0) += 1;
    }
    let (square_circularity, disc_circularity) = disc_and_square_circularity();
    FeatureCheck {
        frames: data.manifest.videos[0].frame_count,
        windows_per_bird,
        all_vectors_171: features.iter().all(|f| f.values.len() == VECTOR_LEN),
        square_circularity,
        disc_circularity,
        translation_bitwise: same_bits(&features, &moved_features),
    }
}

/// Five cages, three birds each, forty windows per bird.
pub fn e2e_fixture(seed: u64) -> (SynthDataset, Vec<WindowFeatureVector>) {
    let data = generate(&SynthConfig {
        cages: 5,
        windows_per_bird: 40,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let features = extract_features(&data.tracks, &data.labels, &FeatureConfig::default());
    (data, features)
}

pub fn e2e_data(seed: u64) -> LocoData {
    let (d, f) = e2e_fixture(seed);
    LocoData::new(d.labels, d.manifest, Some(f), None).unwrap()
}

pub fn e2e_run(seed: u64) -> (LocoData, RunResult) {
    let data = e2e_data(seed);
    let spec = RunSpec::default().with_seed(seed);
    let run = run_loco(&data, &spec).unwrap();
    (data, run)
}

pub const FIXTURE_FRAMES: u32 = 180 * WINDOW_FRAMES;
