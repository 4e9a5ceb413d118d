//! Frame-to-frame kinematics of one track.

use super::shape::AnchoredPoint;
use std::f64::consts::PI;

/// Geometry of one tracked mask that kinematic features are computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub centroid: AnchoredPoint,
    /// Major-axis angle in (-pi/2, pi/2]; only defined modulo pi.
    pub orientation: f64,
    pub area: f64,
}

/// speed, accel, turning_angle, orientation_rate, area_rate.
pub type TemporalFeatures = [Option<f64>; 5];

/// Smallest angle between two axis orientations, in [0, pi/2].
pub fn axis_angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Angle between two displacement vectors, in [0, pi]; 0 if either is zero.
pub fn turning_angle(prev: (f64, f64), cur: (f64, f64)) -> f64 {
    let (n1, n2) = (prev.0.hypot(prev.1), cur.0.hypot(cur.1));
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    let cross = prev.0 * cur.1 - prev.1 * cur.0;
    let dot = prev.0 * cur.0 + prev.1 * cur.1;
    cross.abs().atan2(dot)
}

/// Kinematic features at frame `t`. `at(f)` returns the track's geometry at
/// frame `f`, or `None` when the track has no valid mask there.
pub fn frame_temporal_features(
    at: impl Fn(u32) -> Option<TrackPoint>,
    t: u32,
    fps: f64,
) -> TemporalFeatures {
    let mut out = [None; 5];
    let Some(cur) = at(t) else { return out };
    let Some(prev) = t.checked_sub(1).and_then(&at) else {
        return out;
    };

    let d1 = cur.centroid.delta(&prev.centroid);
    out[0] = Some(d1.0.hypot(d1.1) * fps);
    out[3] = Some(axis_angle_difference(cur.orientation, prev.orientation) * fps);
    out[4] = Some((cur.area - prev.area) * fps);

    if let Some(prev2) = t.checked_sub(2).and_then(&at) {
        let d0 = prev.centroid.delta(&prev2.centroid);
        let (v1, v0) = ((d1.0 * fps, d1.1 * fps), (d0.0 * fps, d0.1 * fps));
        out[1] = Some((v1.0 - v0.0).hypot(v1.1 - v0.1) * fps);
        out[2] = Some(turning_angle(d0, d1));
    }
    out
}
