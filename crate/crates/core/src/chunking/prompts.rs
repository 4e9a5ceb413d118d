use crate::dataset::{BinaryMask, Rle};
use crate::features::shape::LocalMask;
use serde::{Deserialize, Serialize};

/// Point prompt for one track at the start of the chunk beginning at `boundary`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointPrompt {
    pub boundary: u32,
    pub track_id: i64,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptSet {
    pub prompts: Vec<PointPrompt>,
    /// Tracks whose final mask was empty.
    pub lost: Vec<i64>,
}

const FAR: f64 = 1e20;

/// Squared Euclidean distance of each cell to the nearest zero of `f` along
/// one line (lower envelope of parabolas).
fn envelope_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2 * q - 2 * p) as f64;
            if s > z[k] {
                break;
            }
            k -= 1;
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance transform: for every foreground cell,
/// the squared distance to the nearest background cell, where everything
/// outside the raster counts as background. Row-major, 0 on background.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<u64> {
    let (w, h) = (mask.width() + 2, mask.height() + 2);
    let mut grid = vec![0.0f64; w * h];
    for (x, y) in mask.pixels() {
        grid[(y + 1) * w + x + 1] = FAR;
    }
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        envelope_1d(&col, &mut col_out);
        for y in 0..h {
            grid[y * w + x] = col_out[y];
        }
    }
    let mut row_out = vec![0.0; w];
    for y in 0..h {
        envelope_1d(&grid[y * w..(y + 1) * w], &mut row_out);
        grid[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    let mut out = Vec::with_capacity(mask.width() * mask.height());
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            out.push(grid[(y + 1) * w + x + 1] as u64);
        }
    }
    out
}

/// Foreground cell farthest from the background, as raster `(x, y)`;
/// ties go to the smallest `(y, x)`. `None` for an empty mask.
pub fn pole_of_inaccessibility(rle: &Rle) -> Option<(u32, u32)> {
    let local = LocalMask::from_rle(rle)?;
    let dt = squared_distance_transform(&local.mask);
    let w = local.mask.width();
    let mut best: Option<(u64, usize)> = None;
    for (i, &d) in dt.iter().enumerate() {
        if d > 0 && best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| {
        (
            (local.origin_x + (i % w) as i64) as u32,
            (local.origin_y + (i / w) as i64) as u32,
        )
    })
}

/// One prompt per track from its final mask before `boundary`.
pub fn extract_point_prompts(boundary: u32, final_masks: &[(i64, &Rle)]) -> PromptSet {
    let mut set = PromptSet::default();
    let mut masks: Vec<&(i64, &Rle)> = final_masks.iter().collect();
    masks.sort_by_key(|m| m.0);
    for &&(track_id, rle) in &masks {
        match pole_of_inaccessibility(rle) {
            Some((x, y)) => set.prompts.push(PointPrompt {
                boundary,
                track_id,
                x,
                y,
            }),
            None => {
                log::warn!(
                    "track {track_id} has an empty mask before boundary {boundary}; marked lost"
                );
                set.lost.push(track_id);
            }
        }
    }
    set
}
