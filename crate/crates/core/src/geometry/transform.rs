//! Rigid transforms and least-squares rigid alignment (Kabsch).

use super::{GeometryError, Rotation};
use crate::{Mat3, Vec3};
use nalgebra::SVD;

/// Rotation followed by translation: `T(v) = R v + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Rotation::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.rotation.apply(v) + self.translation
    }

    /// `self ∘ rhs`: applies `rhs` first.
    pub fn compose(&self, rhs: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation.apply(&rhs.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rinv = self.rotation.inverse();
        RigidTransform {
            rotation: rinv,
            translation: -rinv.apply(&self.translation),
        }
    }
}

/// Least-squares rigid transform `T` minimizing `Σ ‖T(sᵢ) - tᵢ‖²` over
/// corresponding point pairs, via SVD of the cross-covariance with
/// reflection correction (det always +1).
///
/// Errors with [`GeometryError::AlignmentUnderdetermined`] for fewer than
/// three pairs or a (near-)collinear source set — the failure mode callers
/// must handle rather than crash on, since occlusion can starve the key
/// marker set at any time.
pub fn kabsch_align(source: &[Vec3], target: &[Vec3]) -> Result<RigidTransform, GeometryError> {
    if source.len() != target.len() {
        return Err(GeometryError::AlignmentUnderdetermined(
            "source/target length mismatch",
        ));
    }
    if source.len() < 3 {
        return Err(GeometryError::AlignmentUnderdetermined("fewer than 3 pairs"));
    }
    let n = source.len() as f64;
    let mu_s: Vec3 = source.iter().sum::<Vec3>() / n;
    let mu_t: Vec3 = target.iter().sum::<Vec3>() / n;

    let mut h = Mat3::zeros();
    for (s, t) in source.iter().zip(target) {
        h += (s - mu_s) * (t - mu_t).transpose();
    }

    let svd = SVD::new(h, true, true);
    let sv = svd.singular_values;
    // Collinear (or coincident) source points leave the rotation about the
    // line unconstrained: the second singular value collapses.
    if sv[1] <= 1e-9 * sv[0].max(1e-12) {
        return Err(GeometryError::AlignmentUnderdetermined(
            "collinear or coincident points",
        ));
    }
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut v = v_t.transpose();
    if (v * u.transpose()).determinant() < 0.0 {
        let mut col = v.column_mut(2);
        col *= -1.0;
    }
    let r = Rotation::from_matrix_unchecked(v * u.transpose());
    let t = mu_t - r.apply(&mu_s);
    Ok(RigidTransform::new(r, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_on_equal_sets() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.3, -0.2, 0.9),
        ];
        let t = kabsch_align(&pts, &pts).unwrap();
        assert_abs_diff_eq!((t.rotation.matrix() - Mat3::identity()).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t.translation.norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_pairs_underdetermined() {
        let a = vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(
            kabsch_align(&a, &a),
            Err(GeometryError::AlignmentUnderdetermined("fewer than 3 pairs"))
        );
    }

    #[test]
    fn collinear_source_underdetermined() {
        let src = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
        ];
        assert!(matches!(
            kabsch_align(&src, &src),
            Err(GeometryError::AlignmentUnderdetermined(_))
        ));
    }

    #[test]
    fn reflection_is_corrected() {
        // Planar correspondence that would tempt the naive SVD answer into a
        // reflection: target mirrors source through the xy plane after a flip.
        let src = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
        ];
        let tgt: Vec<Vec3> = src.iter().map(|p| Vec3::new(p.x, -p.y, p.z)).collect();
        let t = kabsch_align(&src, &tgt).unwrap();
        assert!(t.rotation.matrix().determinant() > 0.0);
    }

    #[test]
    fn compose_and_inverse_round_trip() {
        let a = RigidTransform::new(
            Rotation::from_axis_angle(Vec3::new(0.2, 1.0, -0.4), 0.9),
            Vec3::new(0.5, -2.0, 0.25),
        );
        let id = a.compose(&a.inverse());
        assert_abs_diff_eq!((id.rotation.matrix() - Mat3::identity()).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(id.translation.norm(), 0.0, epsilon = 1e-9);
    }
}
