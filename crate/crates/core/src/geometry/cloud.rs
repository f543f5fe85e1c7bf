use super::GeometryError;

/// A set of 3-D points in f64 with optional per-point colors and normals.
///
/// Every coordinate is finite, and colors and normals, when present, have one
/// entry per point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    colors: Option<Vec<[u8; 3]>>,
    normals: Option<Vec<[f64; 3]>>,
}

fn check_finite(values: &[[f64; 3]]) -> Result<(), GeometryError> {
    match values.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        Some(index) => Err(GeometryError::NonFinite { index }),
        None => Ok(()),
    }
}

impl PointCloud {
    pub fn new(
        points: Vec<[f64; 3]>,
        colors: Option<Vec<[u8; 3]>>,
        normals: Option<Vec<[f64; 3]>>,
    ) -> Result<Self, GeometryError> {
        let n = points.len();
        check_finite(&points)?;
        if let Some(colors) = &colors {
            if colors.len() != n {
                return Err(GeometryError::LengthMismatch {
                    what: "colors",
                    expected: n,
                    actual: colors.len(),
                });
            }
        }
        if let Some(normals) = &normals {
            if normals.len() != n {
                return Err(GeometryError::LengthMismatch {
                    what: "normals",
                    expected: n,
                    actual: normals.len(),
                });
            }
            check_finite(normals)?;
        }
        Ok(Self {
            points,
            colors,
            normals,
        })
    }

    pub fn from_points(points: Vec<[f64; 3]>) -> Result<Self, GeometryError> {
        Self::new(points, None, None)
    }

    /// A cloud of `len` origin points with the same attribute layout as `self`,
    /// for use as a pre-sized output buffer.
    pub fn zeros_like(&self) -> Self {
        let n = self.len();
        Self {
            points: vec![[0.0; 3]; n],
            colors: self.colors.as_ref().map(|_| vec![[0; 3]; n]),
            normals: self.normals.as_ref().map(|_| vec![[0.0; 3]; n]),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[[f64; 3]]> {
        self.normals.as_deref()
    }

    /// Axis-aligned bounding box as `(min, max)`, or `None` when empty.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(mut lo, mut hi), p| {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
            (lo, hi)
        }))
    }

    pub(crate) fn parts_mut(
        &mut self,
    ) -> (
        &mut [[f64; 3]],
        Option<&mut [[u8; 3]]>,
        Option<&mut [[f64; 3]]>,
    ) {
        (
            &mut self.points,
            self.colors.as_deref_mut(),
            self.normals.as_deref_mut(),
        )
    }
}
