//! Exact low-level geometric primitives.

mod rotation;
mod transform;

pub use rotation::{geodesic_angle_deg, Rotation};
pub use transform::{kabsch_align, RigidTransform};

use crate::Vec3;
use thiserror::Error;

/// Determinant threshold below which a ray is treated as parallel to the
/// triangle plane; also the minimum accepted ray parameter, so a ray never
/// reports a hit at its own origin.
pub const INTERSECT_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("rigid alignment underdetermined: {0}")]
    AlignmentUnderdetermined(&'static str),
    #[error("degenerate 6D rotation encoding: {0}")]
    DegenerateRotation6D(&'static str),
    #[error("barycentric coordinates ({beta}, {gamma}) outside the simplex")]
    BarycentricOutOfSimplex { beta: f64, gamma: f64 },
    #[error("matrix is not a rotation: {0}")]
    NotARotation(&'static str),
    #[error("quaternion norm {0} too far from 1 to renormalize")]
    QuaternionNotUnit(f64),
}

/// Half-infinite ray; the direction is normalized on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Panics if `direction` has (near-)zero length.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        let n = direction.norm();
        assert!(n > 1e-12, "ray direction must be nonzero");
        Ray {
            origin,
            direction: direction / n,
        }
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    /// Point at parameter `t`.
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v1: Vec3,
    pub v2: Vec3,
    pub v3: Vec3,
}

impl Triangle {
    pub fn new(v1: Vec3, v2: Vec3, v3: Vec3) -> Self {
        Triangle { v1, v2, v3 }
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.v2 - self.v1).cross(&(self.v3 - self.v1)).norm()
    }
}

/// A valid ray/triangle intersection: `t >= 0`, `beta, gamma >= 0`,
/// `beta + gamma <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter of the intersection point (meters from the origin).
    pub t: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Moller-Trumbore ray/triangle intersection.
///
/// Returns a [`Hit`] iff the ray meets the triangle's closed interior at
/// `t > eps`. Near-parallel rays (|det| <= eps) and degenerate triangles
/// report no hit rather than an error. Grazing hits on edges and vertices
/// (beta or gamma exactly 0) count as hits.
pub fn ray_triangle_intersect(ray: &Ray, tri: &Triangle, eps: f64) -> Option<Hit> {
    let e1 = tri.v2 - tri.v1;
    let e2 = tri.v3 - tri.v1;
    let pvec = ray.direction.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() <= eps {
        return None;
    }
    let inv_det = 1.0 / det;
    let svec = ray.origin - tri.v1;
    let beta = svec.dot(&pvec) * inv_det;
    if !(0.0..=1.0).contains(&beta) {
        return None;
    }
    let qvec = svec.cross(&e1);
    let gamma = ray.direction.dot(&qvec) * inv_det;
    if gamma < 0.0 || beta + gamma > 1.0 {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    if t <= eps {
        return None;
    }
    Some(Hit { t, beta, gamma })
}

/// Point `(1 - beta - gamma) v1 + beta v2 + gamma v3`.
///
/// Errors when `(beta, gamma)` lies outside the closed barycentric simplex.
pub fn barycentric_point(tri: &Triangle, beta: f64, gamma: f64) -> Result<Vec3, GeometryError> {
    if beta < 0.0 || gamma < 0.0 || beta + gamma > 1.0 {
        return Err(GeometryError::BarycentricOutOfSimplex { beta, gamma });
    }
    Ok(tri.v1 * (1.0 - beta - gamma) + tri.v2 * beta + tri.v3 * gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_triangle() -> Triangle {
        Triangle::new(
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        )
    }

    #[test]
    fn hit_at_edge_midpoint() {
        let ray = Ray::new(Vec3::new(0.0, -1.0, 1.0), Vec3::new(0.0, 0.0, -1.0));
        let hit = ray_triangle_intersect(&ray, &unit_triangle(), INTERSECT_EPS).unwrap();
        assert_abs_diff_eq!(hit.t, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hit.beta, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hit.gamma, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn parallel_ray_misses() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0));
        assert!(ray_triangle_intersect(&ray, &unit_triangle(), INTERSECT_EPS).is_none());
    }

    #[test]
    fn behind_origin_misses() {
        let ray = Ray::new(Vec3::new(0.0, -1.0, -1.0), Vec3::new(0.0, 0.0, -1.0));
        assert!(ray_triangle_intersect(&ray, &unit_triangle(), INTERSECT_EPS).is_none());
    }

    #[test]
    fn degenerate_triangle_misses() {
        let tri = Triangle::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        );
        let ray = Ray::new(Vec3::new(0.5, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0));
        assert!(ray_triangle_intersect(&ray, &tri, INTERSECT_EPS).is_none());
    }

    #[test]
    fn barycentric_vertices_and_centroid() {
        let tri = unit_triangle();
        assert_eq!(barycentric_point(&tri, 0.0, 0.0).unwrap(), tri.v1);
        let c = barycentric_point(&tri, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!((c - (tri.v1 + tri.v2 + tri.v3) / 3.0).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn barycentric_quarter_half() {
        // hand-evaluated: 0.25*(-1,-1,0) ... lands on the origin
        let p = barycentric_point(&unit_triangle(), 0.25, 0.5).unwrap();
        assert_abs_diff_eq!(p.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn barycentric_rejects_out_of_simplex() {
        let tri = unit_triangle();
        assert!(barycentric_point(&tri, -0.1, 0.0).is_err());
        assert!(barycentric_point(&tri, 0.7, 0.7).is_err());
    }
}
