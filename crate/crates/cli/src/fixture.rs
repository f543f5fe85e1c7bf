//! Synthetic point-cloud pairs with a known rigid motion.

use cvkit_core::geometry::{GeometryError, PointCloud, RigidTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub source: PointCloud,
    /// `truth` applied to `source`.
    pub target: PointCloud,
    pub truth: RigidTransform,
    /// Bounding-box diagonal of the source.
    pub extent: f64,
}

/// Bounding-box diagonal length.
pub fn extent(pc: &PointCloud) -> f64 {
    pc.bounds()
        .map(|(lo, hi)| (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt())
        .unwrap_or(0.0)
}

/// Samples `n` points on a bumpy ellipsoid (semi-axes 2, 1.2, 0.7) colored
/// by height, then moves a copy by a rotation of exactly `rot_deg` degrees
/// about a random axis and a translation of length `trans_frac · extent` in a
/// random direction. Deterministic for a given seed.
pub fn synthetic_pair(n: usize, rot_deg: f64, trans_frac: f64, seed: u64) -> Result<SyntheticPair, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let v = rng.random_range(-1.0f64..1.0).acos();
        let r = 1.0 + 0.2 * (3.0 * u).sin() * (2.0 * v).cos();
        let p = [2.0 * r * v.sin() * u.cos(), 1.2 * r * v.sin() * u.sin(), 0.7 * r * v.cos()];
        let h = ((p[2] / 0.84 + 1.0) * 127.5).clamp(0.0, 255.0) as u8;
        points.push(p);
        colors.push([h, 96, 255 - h]);
    }
    let source = PointCloud::new(points, Some(colors), None)?;
    let extent = extent(&source);

    let mut unit = || loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    };
    let axis = unit();
    let dir = unit();
    let len = trans_frac * extent;
    let truth = RigidTransform::from_axis_angle(axis, rot_deg.to_radians(), [dir[0] * len, dir[1] * len, dir[2] * len])?;
    let mut target = source.zeros_like();
    cvkit_core::geometry::transform_points(&truth, &source, &mut target)?;
    Ok(SyntheticPair {
        source,
        target,
        truth,
        extent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_has_requested_size() {
        let pair = synthetic_pair(200, 10.0, 0.1, 3).unwrap();
        let angle = RigidTransform::identity().rotation_angle_to(&pair.truth);
        assert!((angle - 10f64.to_radians()).abs() < 1e-12);
        assert!((pair.truth.translation().norm() - 0.1 * pair.extent).abs() < 1e-12);
        assert_eq!(pair.source.len(), 200);
        assert_eq!(pair.target.colors(), pair.source.colors());
    }

    #[test]
    fn seeded() {
        let a = synthetic_pair(50, 5.0, 0.05, 9).unwrap();
        let b = synthetic_pair(50, 5.0, 0.05, 9).unwrap();
        assert_eq!(a.target, b.target);
        assert_ne!(a.source, synthetic_pair(50, 5.0, 0.05, 10).unwrap().source);
    }
}
