//! Rotation representation: orthonormal matrix core with quaternion and
//! 6D (first-two-columns) encodings.

use super::GeometryError;
use crate::{Mat3, Vec3};
use nalgebra::{Rotation3, Unit, UnitQuaternion};

/// A proper rotation: orthonormal 3x3 matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Validates orthonormality (RᵀR = I) and det = +1, both within 1e-9.
    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        let gram = m.transpose() * m;
        if (gram - Mat3::identity()).norm() > 1e-9 {
            return Err(GeometryError::NotARotation("RᵀR differs from identity"));
        }
        if (m.determinant() - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NotARotation("determinant is not +1"));
        }
        Ok(Rotation(m))
    }

    /// Caller asserts the matrix is already a proper rotation.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Self {
        let axis = Unit::new_normalize(axis);
        Rotation(Rotation3::from_axis_angle(&axis, angle_rad).into_inner())
    }

    /// From a `(w, x, y, z)` quaternion. Renormalizes when the norm deviates
    /// from 1 by at most 1e-6, errors beyond that.
    pub fn from_quaternion_wxyz(q: [f64; 4]) -> Result<Self, GeometryError> {
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        let n = quat.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(GeometryError::QuaternionNotUnit(n));
        }
        let uq = UnitQuaternion::from_quaternion(quat);
        Ok(Rotation(uq.to_rotation_matrix().into_inner()))
    }

    pub fn to_quaternion_wxyz(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0));
        [q.w, q.i, q.j, q.k]
    }

    /// First two matrix columns, concatenated: `(m00,m10,m20, m01,m11,m21)`.
    pub fn to_6d(&self) -> [f64; 6] {
        let c1 = self.0.column(0);
        let c2 = self.0.column(1);
        [c1[0], c1[1], c1[2], c2[0], c2[1], c2[2]]
    }

    /// Gram-Schmidt decode of a 6D encoding; the third column is the cross
    /// product, so only the directions of the two halves matter.
    pub fn from_6d(v: &[f64; 6]) -> Result<Self, GeometryError> {
        let a1 = Vec3::new(v[0], v[1], v[2]);
        let a2 = Vec3::new(v[3], v[4], v[5]);
        let n1 = a1.norm();
        if n1 < 1e-9 {
            return Err(GeometryError::DegenerateRotation6D("first half near zero"));
        }
        let b1 = a1 / n1;
        let proj = a2 - b1 * b1.dot(&a2);
        let n2 = proj.norm();
        if n2 < 1e-9 {
            return Err(GeometryError::DegenerateRotation6D(
                "second half parallel to first or near zero",
            ));
        }
        let b2 = proj / n2;
        let b3 = b1.cross(&b2);
        Ok(Rotation(Mat3::from_columns(&[b1, b2, b3])))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// Geodesic angle between two rotations in degrees:
/// `arccos((trace(r1ᵀ r2) - 1) / 2)`, clamped into [0°, 180°].
pub fn geodesic_angle_deg(r1: &Rotation, r2: &Rotation) -> f64 {
    let rel = r1.0.transpose() * r2.0;
    let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}
