//! Shape descriptors of a single mask.

use super::shape::{
    components, convex_hull, polygon_length, simplify_closed, trace_outer_contour,
    twice_polygon_area, LocalMask, Moments,
};
use crate::dataset::Rle;

/// Douglas-Peucker tolerance, in pixels, applied to the traced pixel-edge
/// contour before measuring its length. Removes the staircase so that a
/// digitised disc measures close to its true circumference.
pub const CONTOUR_TOLERANCE: f64 = 1.0;

/// The nine spatial features of one mask, plus the geometry the temporal and
/// social features are derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFeatures {
    pub area: f64,
    pub perimeter: f64,
    pub circularity: f64,
    pub solidity: f64,
    pub eccentricity: f64,
    pub major_axis: f64,
    pub minor_axis: f64,
    pub extent: f64,
    pub orientation: f64,
    pub moments: Moments,
}

impl SpatialFeatures {
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.area,
            self.perimeter,
            self.circularity,
            self.solidity,
            self.eccentricity,
            self.major_axis,
            self.minor_axis,
            self.extent,
            self.orientation,
        ]
    }
}

/// Outer-contour perimeter and convex-hull area (in px²) over all components.
pub fn contour_geometry(local: &LocalMask) -> (f64, f64) {
    let mut perimeter = 0.0;
    let mut hull_points = Vec::new();
    for comp in components(&local.mask) {
        let contour = trace_outer_contour(&local.mask, comp[0]);
        let as_f: Vec<(f64, f64)> = contour.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        perimeter += polygon_length(&simplify_closed(&as_f, CONTOUR_TOLERANCE));
        hull_points.extend(contour);
    }
    let hull = convex_hull(&hull_points);
    let hull_area = twice_polygon_area(&hull).unsigned_abs() as f64 / 2.0;
    (perimeter, hull_area)
}

/// Spatial features of a decoded-on-demand mask; `None` for an empty mask.
pub fn frame_spatial_features(rle: &Rle) -> Option<SpatialFeatures> {
    let local = LocalMask::from_rle(rle)?;
    spatial_from_local(&local)
}

pub fn spatial_from_local(local: &LocalMask) -> Option<SpatialFeatures> {
    let moments = Moments::of(local)?;
    let area = moments.area as f64;
    let (perimeter, hull_area) = contour_geometry(local);
    let (l1, l2) = moments.eigenvalues();
    let eccentricity = if l1 > 0.0 {
        (1.0 - l2 / l1).max(0.0).sqrt()
    } else {
        0.0
    };
    let bbox_area = (local.mask.width() * local.mask.height()) as f64;
    Some(SpatialFeatures {
        area,
        perimeter,
        circularity: 4.0 * std::f64::consts::PI * area / (perimeter * perimeter),
        solidity: area / hull_area,
        eccentricity,
        major_axis: 4.0 * l1.sqrt(),
        minor_axis: 4.0 * l2.sqrt(),
        extent: area / bbox_area,
        orientation: moments.orientation(),
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BinaryMask;
    use std::f64::consts::PI;

    fn disc(r: f64, size: usize) -> BinaryMask {
        let c = size as f64 / 2.0;
        BinaryMask::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn square_side_100() {
        let m = BinaryMask::from_fn(120, 120, |x, y| {
            (10..110).contains(&x) && (10..110).contains(&y)
        });
        let f = frame_spatial_features(&m.encode()).unwrap();
        assert_eq!(f.area, 10_000.0);
        assert!(
            (f.circularity - PI / 4.0).abs() < 1e-12,
            "{}",
            f.circularity
        );
        assert_eq!(f.extent, 1.0);
        assert_eq!(f.solidity, 1.0);
        assert!(f.eccentricity.abs() < 1e-12);
    }

    #[test]
    fn disc_radius_50_is_nearly_circular() {
        let f = frame_spatial_features(&disc(50.0, 128).encode()).unwrap();
        assert!(
            (0.95..=1.02).contains(&f.circularity),
            "circularity {}",
            f.circularity
        );
        assert!(f.solidity > 0.97 && f.solidity <= 1.0);
        assert!(f.eccentricity < 0.05);
    }

    #[test]
    fn circularity_of_discs_across_radii() {
        for r in [25.0, 33.0, 40.0, 50.0, 70.0] {
            let f = frame_spatial_features(&disc(r, 2 * r as usize + 8).encode()).unwrap();
            assert!(
                (0.95..=1.02).contains(&f.circularity),
                "r={r}: {}",
                f.circularity
            );
        }
    }

    #[test]
    fn ellipse_axes_and_orientation() {
        // Semi-axes 40 and 10, long axis along x.
        let m = BinaryMask::from_fn(100, 40, |x, y| {
            let (dx, dy) = (x as f64 - 50.0, y as f64 - 20.0);
            (dx / 40.0).powi(2) + (dy / 10.0).powi(2) <= 1.0
        });
        let f = frame_spatial_features(&m.encode()).unwrap();
        assert!((f.major_axis - 80.0).abs() < 2.0, "{}", f.major_axis);
        assert!((f.minor_axis - 20.0).abs() < 2.0, "{}", f.minor_axis);
        assert!(f.orientation.abs() < 1e-9);
        assert!((f.eccentricity - (1.0f64 - 1.0 / 16.0).sqrt()).abs() < 0.01);
        let t = BinaryMask::from_fn(40, 100, |x, y| m.get(y, x));
        let ft = frame_spatial_features(&t.encode()).unwrap();
        assert!((ft.orientation.abs() - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_pixel() {
        let m = BinaryMask::from_fn(3, 3, |x, y| x == 1 && y == 1);
        let f = frame_spatial_features(&m.encode()).unwrap();
        assert_eq!(f.area, 1.0);
        assert!((f.perimeter - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(f.eccentricity, 0.0);
        assert_eq!(f.solidity, 1.0);
    }

    #[test]
    fn empty_mask_is_degenerate() {
        assert!(frame_spatial_features(&BinaryMask::new(4, 4).encode()).is_none());
    }
}
