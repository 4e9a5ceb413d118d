//! Binary masks and their run-length encoding.
//!
//! Counts follow the uncompressed COCO convention: the raster is walked in
//! column-major order (pixel `(x, y)` sits at index `y + height * x`) and the
//! counts alternate background/foreground, always starting with a
//! (possibly empty) background run.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned box in pixel units: top-left corner plus width and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        BBox::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Dense binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    /// Builds a mask by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Like [`get`](Self::get) but treats out-of-raster coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Tight bounding box, `None` for an empty mask.
    pub fn bbox(&self) -> Option<BBox> {
        let mut min_x = usize::MAX;
        let mut min_y = usize::MAX;
        let mut max_x = 0;
        let mut max_y = 0;
        let mut any = false;
        for (x, y) in self.pixels() {
            any = true;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        any.then(|| {
            BBox::new(
                min_x as f64,
                min_y as f64,
                (max_x - min_x + 1) as f64,
                (max_y - min_y + 1) as f64,
            )
        })
    }

    pub fn encode(&self) -> Rle {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for x in 0..self.width {
            for y in 0..self.height {
                let v = self.get(x, y);
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        Rle {
            height: self.height,
            width: self.width,
            counts,
        }
    }
}

/// Column-major run-length encoded mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u32>,
}

impl Rle {
    /// Checks that the runs cover exactly `height * width` cells.
    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        let expected = (self.height * self.width) as u64;
        if total != expected {
            return Err(Error::Validation(format!(
                "RLE covers {total} cells but raster is {}x{} = {expected}",
                self.height, self.width
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> u64 {
        self.counts
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&c| c as u64)
            .sum()
    }

    /// Foreground intervals `[start, end)` in column-major index space.
    pub fn foreground_runs(&self) -> Vec<(u64, u64)> {
        let mut runs = Vec::with_capacity(self.counts.len() / 2);
        let mut pos = 0u64;
        for (i, &c) in self.counts.iter().enumerate() {
            let next = pos + c as u64;
            if i % 2 == 1 && c > 0 {
                runs.push((pos, next));
            }
            pos = next;
        }
        runs
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        self.validate()?;
        let mut m = BinaryMask::new(self.width, self.height);
        for (start, end) in self.foreground_runs() {
            for idx in start..end {
                let idx = idx as usize;
                let x = idx / self.height;
                let y = idx % self.height;
                m.set(x, y, true);
            }
        }
        Ok(m)
    }

    /// Tight bounding box computed directly from the runs.
    pub fn bbox(&self) -> Option<BBox> {
        if self.height == 0 {
            return None;
        }
        let h = self.height as u64;
        let mut min_x = u64::MAX;
        let mut max_x = 0;
        let mut min_y = u64::MAX;
        let mut max_y = 0;
        for (start, end) in self.foreground_runs() {
            let x0 = start / h;
            let x1 = (end - 1) / h;
            min_x = min_x.min(x0);
            max_x = max_x.max(x1);
            if x0 == x1 {
                min_y = min_y.min(start % h);
                max_y = max_y.max((end - 1) % h);
            } else {
                // Crossing a column boundary touches both the last and the first row.
                min_y = 0;
                max_y = h - 1;
            }
        }
        (min_x != u64::MAX).then(|| {
            BBox::new(
                min_x as f64,
                min_y as f64,
                (max_x - min_x + 1) as f64,
                (max_y - min_y + 1) as f64,
            )
        })
    }

    /// Number of cells set in both masks.
    pub fn intersection_area(&self, other: &Rle) -> u64 {
        let a = self.foreground_runs();
        let b = other.foreground_runs();
        let (mut i, mut j) = (0, 0);
        let mut inter = 0;
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                inter += hi - lo;
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        inter
    }

    /// Mask intersection-over-union; 0 when both masks are empty or rasters differ.
    pub fn iou(&self, other: &Rle) -> f64 {
        if self.height != other.height || self.width != other.width {
            return 0.0;
        }
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}
