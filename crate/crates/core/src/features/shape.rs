//! Per-mask shape geometry: outer contours, convex hull and image moments.
//!
//! Everything here works on a mask cropped to its bounding box, with
//! coordinates relative to the box origin. Sums are accumulated in integers,
//! so translating a mask leaves every derived value bit-for-bit identical.

use crate::dataset::{BinaryMask, Rle};

/// A mask cropped to its tight box, remembering where the box sits.
#[derive(Debug, Clone)]
pub struct LocalMask {
    pub origin_x: i64,
    pub origin_y: i64,
    pub mask: BinaryMask,
}

impl LocalMask {
    /// Decodes only the cells inside the tight box. `None` for an empty mask.
    pub fn from_rle(rle: &Rle) -> Option<LocalMask> {
        let bbox = rle.bbox()?;
        let (x0, y0) = (bbox.x as usize, bbox.y as usize);
        let mut mask = BinaryMask::new(bbox.w as usize, bbox.h as usize);
        let h = rle.height as u64;
        for (start, end) in rle.foreground_runs() {
            for idx in start..end {
                let x = (idx / h) as usize;
                let y = (idx % h) as usize;
                mask.set(x - x0, y - y0, true);
            }
        }
        Some(LocalMask {
            origin_x: x0 as i64,
            origin_y: y0 as i64,
            mask,
        })
    }

    pub fn from_mask(m: &BinaryMask) -> Option<LocalMask> {
        LocalMask::from_rle(&m.encode())
    }
}

/// Point split into an integer anchor and a fractional offset so that
/// differences between points are unaffected by integer translations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchoredPoint {
    pub ax: i64,
    pub ay: i64,
    pub fx: f64,
    pub fy: f64,
}

impl AnchoredPoint {
    pub fn new(ax: i64, ay: i64, fx: f64, fy: f64) -> Self {
        AnchoredPoint { ax, ay, fx, fy }
    }

    /// `self - other` as a real vector.
    pub fn delta(&self, other: &AnchoredPoint) -> (f64, f64) {
        (
            (self.ax - other.ax) as f64 + (self.fx - other.fx),
            (self.ay - other.ay) as f64 + (self.fy - other.fy),
        )
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.ax as f64 + self.fx, self.ay as f64 + self.fy)
    }
}

/// Second-order moment summary of a pixel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub area: u64,
    pub centroid: AnchoredPoint,
    /// Central second moments normalised by area.
    pub cov_xx: f64,
    pub cov_yy: f64,
    pub cov_xy: f64,
}

impl Moments {
    pub fn of(local: &LocalMask) -> Option<Moments> {
        let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) =
            (0i128, 0i128, 0i128, 0i128, 0i128, 0i128);
        for (x, y) in local.mask.pixels() {
            let (x, y) = (x as i128, y as i128);
            n += 1;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        if n == 0 {
            return None;
        }
        let n2 = (n * n) as f64;
        let nf = n as f64;
        Some(Moments {
            area: n as u64,
            centroid: AnchoredPoint::new(
                local.origin_x,
                local.origin_y,
                sx as f64 / nf,
                sy as f64 / nf,
            ),
            cov_xx: (n * sxx - sx * sx) as f64 / n2,
            cov_yy: (n * syy - sy * sy) as f64 / n2,
            cov_xy: (n * sxy - sx * sy) as f64 / n2,
        })
    }

    /// Eigenvalues of the covariance, larger first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = (self.cov_xx + self.cov_yy) / 2.0;
        let half_diff = (self.cov_xx - self.cov_yy) / 2.0;
        let r = (half_diff * half_diff + self.cov_xy * self.cov_xy).sqrt();
        (mean + r, (mean - r).max(0.0))
    }

    /// Major-axis angle from the x axis, in (-pi/2, pi/2].
    pub fn orientation(&self) -> f64 {
        if self.cov_xy == 0.0 && self.cov_xx == self.cov_yy {
            return 0.0;
        }
        0.5 * (2.0 * self.cov_xy).atan2(self.cov_xx - self.cov_yy)
    }
}

/// Splits the foreground into 8-connected components, largest first.
/// Each component is returned as the list of its pixels.
pub fn components(mask: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (mask.width(), mask.height());
    let mut label = vec![usize::MAX; w * h];
    let mut comps: Vec<Vec<(usize, usize)>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || label[y * w + x] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut pixels = Vec::new();
            let mut stack = vec![(x, y)];
            label[y * w + x] = id;
            while let Some((cx, cy)) = stack.pop() {
                pixels.push((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if mask.get_signed(nx, ny) {
                            let i = ny as usize * w + nx as usize;
                            if label[i] == usize::MAX {
                                label[i] = id;
                                stack.push((nx as usize, ny as usize));
                            }
                        }
                    }
                }
            }
            pixels.sort_by_key(|&(px, py)| (py, px));
            comps.push(pixels);
        }
    }
    // Stable sort keeps raster order between equally sized components.
    comps.sort_by(|a, b| b.len().cmp(&a.len()));
    comps
}

/// Traces the outer boundary of the 8-connected component containing the
/// first foreground pixel in raster order, along pixel edges.
///
/// Returns the polygon vertices (pixel corners) where the boundary turns, in
/// clockwise order (image coordinates, y down), starting at the top-left
/// corner of `start`.
pub fn trace_outer_contour(mask: &BinaryMask, start: (usize, usize)) -> Vec<(i64, i64)> {
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)]; // E S W N
    let fg = |x: i64, y: i64| mask.get_signed(x, y);
    // Pixels ahead-left / ahead-right of a vertex for each heading.
    let ahead = |vx: i64, vy: i64, d: usize| -> (bool, bool) {
        match d {
            0 => (fg(vx, vy - 1), fg(vx, vy)),
            1 => (fg(vx, vy), fg(vx - 1, vy)),
            2 => (fg(vx - 1, vy), fg(vx - 1, vy - 1)),
            _ => (fg(vx - 1, vy - 1), fg(vx, vy - 1)),
        }
    };
    let start_v = (start.0 as i64, start.1 as i64);
    let mut v = start_v;
    let mut dir = 0usize;
    let mut corners = vec![start_v];
    loop {
        v = (v.0 + DIRS[dir].0, v.1 + DIRS[dir].1);
        let (left, right) = ahead(v.0, v.1, dir);
        let next = if left {
            (dir + 3) % 4
        } else if right {
            dir
        } else {
            (dir + 1) % 4
        };
        if v == start_v && next == 0 {
            break;
        }
        if next != dir {
            corners.push(v);
        }
        dir = next;
    }
    corners
}

pub fn polygon_length(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        total += ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    }
    total
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((p.0 - a.0).powi(2) + (p.1 - a.1).powi(2)).sqrt();
    }
    ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / len2.sqrt()
}

fn douglas_peucker(points: &[(f64, f64)], tol: f64, keep: &mut [bool], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let (mut best, mut best_d) = (lo, -1.0);
    for i in lo + 1..hi {
        let d = point_segment_distance(points[i], points[lo], points[hi]);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    if best_d > tol {
        keep[best] = true;
        douglas_peucker(points, tol, keep, lo, best);
        douglas_peucker(points, tol, keep, best, hi);
    }
}

/// Douglas-Peucker simplification of a closed polygon. The split point is
/// the vertex farthest from the first one, so the result does not depend on
/// where tracing started beyond that choice.
pub fn simplify_closed(poly: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let n = poly.len();
    if n < 4 {
        return poly.to_vec();
    }
    let far = (1..n)
        .max_by(|&a, &b| {
            let da = (poly[a].0 - poly[0].0).powi(2) + (poly[a].1 - poly[0].1).powi(2);
            let db = (poly[b].0 - poly[0].0).powi(2) + (poly[b].1 - poly[0].1).powi(2);
            da.partial_cmp(&db).unwrap().then(b.cmp(&a))
        })
        .unwrap();
    let mut closed: Vec<(f64, f64)> = poly.to_vec();
    closed.push(poly[0]);
    let mut keep = vec![false; closed.len()];
    keep[0] = true;
    keep[far] = true;
    keep[n] = true;
    douglas_peucker(&closed, tol, &mut keep, 0, far);
    douglas_peucker(&closed, tol, &mut keep, far, n);
    if keep.iter().take(n).filter(|&&k| k).count() < 3 {
        // Never collapse a 2-D region to a segment.
        let third = (1..n)
            .filter(|&i| i != far)
            .max_by(|&a, &b| {
                let da = point_segment_distance(poly[a], poly[0], poly[far]);
                let db = point_segment_distance(poly[b], poly[0], poly[far]);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        keep[third] = true;
    }
    closed
        .iter()
        .zip(&keep)
        .take(n)
        .filter(|(_, &k)| k)
        .map(|(&p, _)| p)
        .collect()
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull via the monotone chain, counter-clockwise, no collinear points.
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Twice the signed shoelace area, exact for integer vertices.
pub fn twice_polygon_area(poly: &[(i64, i64)]) -> i64 {
    let n = poly.len();
    let mut s = 0i64;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        s += a.0 * b.1 - b.0 * a.1;
    }
    s
}
