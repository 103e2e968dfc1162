//! Planar geometry on closed curves in the complex energy plane.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

/// Winding number of the closed polygon `curve` (last point joins the
/// first) around `z`.
pub fn winding_number(curve: &[C64], z: C64) -> i64 {
    let n = curve.len();
    if n < 2 {
        return 0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let a = curve[i] - z;
        let b = curve[(i + 1) % n] - z;
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Euclidean distance from `z` to the closed polygon `curve`.
pub fn distance_to_curve(curve: &[C64], z: C64) -> f64 {
    let n = curve.len();
    match n {
        0 => f64::INFINITY,
        1 => (curve[0] - z).norm(),
        _ => (0..n)
            .map(|i| segment_distance(curve[i], curve[(i + 1) % n], z))
            .fold(f64::INFINITY, f64::min),
    }
}

fn segment_distance(a: C64, b: C64, z: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * ab.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (a + ab * t - z).norm()
}
