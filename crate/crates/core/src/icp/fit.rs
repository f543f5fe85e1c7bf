use nalgebra::{Matrix3, Vector3, SVD};

use super::IcpError;
use crate::geometry::RigidTransform;

/// Singular-value ratio below which the cross-covariance counts as rank
/// deficient.
pub const DEGENERACY_RATIO: f64 = 1e-12;

/// Least-squares rigid motion mapping `source[i]` onto `target[i]`.
///
/// Centers both sets, takes the SVD `H = UΣVᵀ` of the cross-covariance
/// `H = Σ (s_i − μ_s)(t_i − μ_t)ᵀ` and returns `R = V·diag(1, 1, det(VUᵀ))·Uᵀ`,
/// `t = μ_t − R·μ_s`. Fails when fewer than 3 pairs are given or the second
/// singular value of `H` is below `DEGENERACY_RATIO` times the first, which
/// covers collinear and coincident sources.
pub fn fit_rigid_svd(source: &[[f64; 3]], target: &[[f64; 3]]) -> Result<RigidTransform, IcpError> {
    if source.len() != target.len() {
        return Err(IcpError::LengthMismatch {
            sources: source.len(),
            targets: target.len(),
        });
    }
    if source.len() < 3 {
        return Err(IcpError::DegenerateConfiguration(format!(
            "{} correspondences, need at least 3",
            source.len()
        )));
    }
    let n = source.len() as f64;
    let centroid = |pts: &[[f64; 3]]| {
        let mut sum = Vector3::zeros();
        for p in pts {
            sum += Vector3::from(*p);
        }
        sum / n
    };
    let (mu_s, mu_t) = (centroid(source), centroid(target));

    let mut h = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        let sc = Vector3::from(*s) - mu_s;
        let tc = Vector3::from(*t) - mu_t;
        h += sc * tc.transpose();
    }

    let svd = SVD::new(h, true, true);
    let mut sv = svd.singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if sv[1].is_nan() || sv[1] <= DEGENERACY_RATIO * sv[0] {
        return Err(IcpError::DegenerateConfiguration(
            "points are collinear or coincident".into(),
        ));
    }
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let t = mu_t - r * mu_s;
    Ok(RigidTransform::from_parts_unchecked(r, t))
}

/// Root mean squared Euclidean distance between paired points.
pub fn rmse(source: &[[f64; 3]], target: &[[f64; 3]]) -> Result<f64, IcpError> {
    if source.len() != target.len() {
        return Err(IcpError::LengthMismatch {
            sources: source.len(),
            targets: target.len(),
        });
    }
    if source.is_empty() {
        return Err(IcpError::EmptySet);
    }
    let sum: f64 = source
        .iter()
        .zip(target)
        .map(|(s, t)| (0..3).map(|k| (s[k] - t[k]) * (s[k] - t[k])).sum::<f64>())
        .sum();
    Ok((sum / source.len() as f64).sqrt())
}
