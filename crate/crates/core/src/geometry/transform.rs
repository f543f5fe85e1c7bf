use nalgebra::{Matrix3, Unit, Vector3};

use super::{GeometryError, PointCloud};

/// Tolerance on `RᵀR = I` (per entry) and `det R = 1`.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// A proper rigid motion `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    /// Checks that `rotation` is orthonormal with determinant +1 within
    /// [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(GeometryError::NonFiniteTransform);
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > ROTATION_TOLERANCE
            || (rotation.determinant() - 1.0).abs() > ROTATION_TOLERANCE
        {
            return Err(GeometryError::NotARotation);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Row-major rotation and translation arrays.
    pub fn from_arrays(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self, GeometryError> {
        let r = Matrix3::from_fn(|i, j| rotation[i][j]);
        Self::new(r, Vector3::from(translation))
    }

    /// Skips validation. Callers guarantee a rotation produced by an
    /// orthonormal construction (SVD projection, products of rotations).
    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::from(t),
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized here), followed
    /// by translation `t`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64, t: [f64; 3]) -> Result<Self, GeometryError> {
        let axis = Unit::try_new(Vector3::from(axis), f64::EPSILON)
            .ok_or(GeometryError::NotARotation)?;
        let r = nalgebra::Rotation3::from_axis_angle(&axis, angle);
        Self::new(*r.matrix(), Vector3::from(t))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_rows(&self) -> [[f64; 3]; 3] {
        let r = &self.rotation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ]
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    #[inline]
    pub fn apply(&self, p: &[f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)] * p[0] + r[(0, 1)] * p[1] + r[(0, 2)] * p[2] + t.x,
            r[(1, 0)] * p[0] + r[(1, 1)] * p[1] + r[(1, 2)] * p[2] + t.y,
            r[(2, 0)] * p[0] + r[(2, 1)] * p[1] + r[(2, 2)] * p[2] + t.z,
        ]
    }

    #[inline]
    pub fn rotate(&self, v: &[f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[(0, 0)] * v[0] + r[(0, 1)] * v[1] + r[(0, 2)] * v[2],
            r[(1, 0)] * v[0] + r[(1, 1)] * v[1] + r[(1, 2)] * v[2],
            r[(2, 0)] * v[0] + r[(2, 1)] * v[1] + r[(2, 2)] * v[2],
        ]
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Angle in radians of the relative rotation `selfᵀ·other`.
    pub fn rotation_angle_to(&self, other: &Self) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        // atan2 keeps precision for small angles where acos of the trace does not
        let sin = Vector3::new(
            rel[(2, 1)] - rel[(1, 2)],
            rel[(0, 2)] - rel[(2, 0)],
            rel[(1, 0)] - rel[(0, 1)],
        )
        .norm()
            / 2.0;
        sin.atan2((rel.trace() - 1.0) / 2.0)
    }
}

/// Writes `T` applied to `pc` into `out`, which must already have the same
/// length and attribute layout. Colors are copied and normals rotated.
/// Allocates nothing.
pub fn transform_points(
    t: &RigidTransform,
    pc: &PointCloud,
    out: &mut PointCloud,
) -> Result<(), GeometryError> {
    if out.len() != pc.len() {
        return Err(GeometryError::SizeMismatch(format!(
            "{} points in, {} out",
            pc.len(),
            out.len()
        )));
    }
    let (points, colors, normals) = out.parts_mut();
    match (pc.colors(), colors) {
        (Some(src), Some(dst)) => dst.copy_from_slice(src),
        (None, None) => {}
        _ => return Err(GeometryError::SizeMismatch("color layout differs".into())),
    }
    match (pc.normals(), normals) {
        (Some(src), Some(dst)) => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = t.rotate(s);
            }
        }
        (None, None) => {}
        _ => return Err(GeometryError::SizeMismatch("normal layout differs".into())),
    }
    for (d, s) in points.iter_mut().zip(pc.points()) {
        *d = t.apply(s);
    }
    Ok(())
}
