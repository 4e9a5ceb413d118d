//! Random detection streams and exhaustive-search planner oracles.

use playclass::chunking::{BoxDetection, DetectionStream, PlannerConfig};
use playclass::dataset::BBox;
use rand::Rng;

/// Integer-coordinate boxes on a coarse grid, so distance ties are common.
pub fn random_stream(rng: &mut impl Rng, frame_count: u32) -> DetectionStream {
    let mut s = DetectionStream::new();
    for f in 0..frame_count {
        let n = rng.gen_range(0..=4);
        if n == 0 {
            continue;
        }
        let dets = (0..n)
            .map(|_| BoxDetection {
                bbox: BBox::new(
                    (rng.gen_range(0..20) * 10) as f64,
                    (rng.gen_range(0..20) * 10) as f64,
                    20.0,
                    20.0,
                ),
                confidence: [0.5, 0.75, 0.9, 1.0][rng.gen_range(0..4)],
            })
            .collect();
        s.insert(f, dets);
    }
    s
}

fn min_dist(dets: &[BoxDetection]) -> Option<f64> {
    let mut all = Vec::new();
    for a in dets {
        for b in dets {
            if std::ptr::eq(a, b) {
                continue;
            }
            let dx = (a.bbox.x + a.bbox.w / 2.0) - (b.bbox.x + b.bbox.w / 2.0);
            let dy = (a.bbox.y + a.bbox.h / 2.0) - (b.bbox.y + b.bbox.h / 2.0);
            all.push(dx.hypot(dy));
        }
    }
    all.into_iter().reduce(f64::min)
}

/// Exhaustive grounding search: rank every admissible frame by
/// (score desc, frame asc) and take the first.
pub fn grounding_oracle(s: &DetectionStream, cfg: &PlannerConfig) -> Option<u32> {
    let rows: Vec<(u32, usize, f64)> = (0..cfg.grounding_frames)
        .map(|f| {
            let dets = s.get(&f).cloned().unwrap_or_default();
            let conf = dets
                .iter()
                .map(|d| d.confidence)
                .reduce(f64::min)
                .unwrap_or(0.0);
            let sep = min_dist(&dets).map_or(1.0, |d| (d / cfg.d_ref).min(1.0));
            (f, dets.len(), conf * sep)
        })
        .collect();
    let max_n = rows.iter().map(|r| r.1).max()?;
    if max_n == 0 {
        return None;
    }
    let want = if rows.iter().any(|r| r.1 == cfg.expected_count) {
        cfg.expected_count
    } else {
        max_n
    };
    let mut cands: Vec<&(u32, usize, f64)> = rows.iter().filter(|r| r.1 == want).collect();
    cands.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    Some(cands[0].0)
}

/// Exhaustive boundary search: rank each window's frames by
/// (separation desc, distance to nominal asc, frame asc).
pub fn boundary_oracle(
    s: &DetectionStream,
    frame_count: u32,
    cfg: &PlannerConfig,
) -> Vec<(u32, bool)> {
    let mut out = Vec::new();
    let mut n = 1;
    while n * cfg.chunk_len < frame_count {
        let nominal = n * cfg.chunk_len;
        let lo = nominal.saturating_sub(cfg.delta).max(1);
        let hi = (nominal + cfg.delta).min(frame_count - 1);
        let mut cands: Vec<(f64, u32, u32)> = (lo..=hi)
            .filter_map(|f| {
                s.get(&f)
                    .and_then(|d| min_dist(d))
                    .map(|d| (d, f.abs_diff(nominal), f))
            })
            .collect();
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        out.push(cands.first().map_or((nominal, true), |c| (c.2, false)));
        n += 1;
    }
    out
}
