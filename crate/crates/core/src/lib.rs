//! Core geometry and kinematics for optical motion capture tooling.
//!
//! Two layers live here:
//!
//! * [`geometry`] — exact primitives: ray/triangle intersection, barycentric
//!   evaluation, rigid alignment, rotation representations, angular metrics.
//! * [`kinematics`] — skeletons, forward kinematics, linear blend skinning,
//!   marker placement on a deformed mesh, and T-pose alignment.
//!
//! Everything is pure and `f64`; types are immutable after construction and
//! safe to share across threads.

pub mod geometry;
pub mod kinematics;

pub use geometry::{
    barycentric_point, geodesic_angle_deg, kabsch_align, ray_triangle_intersect, GeometryError,
    Hit, Ray, RigidTransform, Rotation, Triangle,
};
pub use kinematics::{
    align_to_tpose, centralize, forward_kinematics, lbs_deform, markers_from_mesh, FkResult,
    Joint, KinematicsError, MarkerBinding, MarkerFrame, MarkerLayout, MarkerSequence, Pose,
    Skeleton, SkinnedMesh,
};

/// 3-vector in scene units (meters).
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
