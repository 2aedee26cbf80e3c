//! Skeletons, forward kinematics, skinning, and marker-frame operations.

mod markers;
mod skinning;

pub use markers::{
    align_to_tpose, centralize, markers_from_mesh, MarkerBinding, MarkerFrame, MarkerLayout,
    MarkerSequence,
};
pub use skinning::{lbs_deform, SkinnedMesh};

use crate::geometry::{GeometryError, RigidTransform, Rotation};
use crate::Vec3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid marker layout: {0}")]
    InvalidLayout(String),
    #[error("pose has {got} rotations, skeleton has {expected} joints")]
    PoseMismatch { expected: usize, got: usize },
    #[error("marker frame has no visible markers")]
    EmptyFrame,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl KinematicsError {
    /// True when the underlying cause is an underdetermined rigid alignment.
    pub fn is_underdetermined(&self) -> bool {
        matches!(
            self,
            KinematicsError::Geometry(GeometryError::AlignmentUnderdetermined(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    /// `None` for the root; otherwise an index strictly below this joint's.
    pub parent: Option<usize>,
    /// Offset from the parent joint in the parent's rest frame, meters.
    /// The root's offset is superseded by the pose's root translation.
    pub rest_offset: Vec3,
}

/// Joint hierarchy, topologically sorted with the single root at index 0.
/// Rest-pose global transforms are precomputed on construction and shared
/// immutably.
#[derive(Debug, Clone)]
pub struct Skeleton {
    joints: Vec<Joint>,
    rest_globals: Vec<RigidTransform>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self, KinematicsError> {
        if joints.is_empty() {
            return Err(KinematicsError::InvalidSkeleton("no joints".into()));
        }
        for (i, j) in joints.iter().enumerate() {
            match j.parent {
                None if i != 0 => {
                    return Err(KinematicsError::InvalidSkeleton(format!(
                        "joint {i} ({}) is a second root",
                        j.name
                    )))
                }
                Some(p) if p >= i => {
                    return Err(KinematicsError::InvalidSkeleton(format!(
                        "joint {i} ({}) has parent {p}; parents must precede children",
                        j.name
                    )))
                }
                _ => {}
            }
        }
        if joints[0].parent.is_some() {
            return Err(KinematicsError::InvalidSkeleton("joint 0 must be the root".into()));
        }
        let mut rest_globals = vec![RigidTransform::identity(); joints.len()];
        for (i, j) in joints.iter().enumerate() {
            if let Some(p) = j.parent {
                let parent = rest_globals[p];
                rest_globals[i] = RigidTransform::new(
                    parent.rotation,
                    parent.translation + parent.rotation.apply(&j.rest_offset),
                );
            }
        }
        Ok(Skeleton {
            joints,
            rest_globals,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Global transforms of the identity pose (zero root translation).
    pub fn rest_globals(&self) -> &[RigidTransform] {
        &self.rest_globals
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }
}

/// Per-frame articulation: local joint rotations plus root translation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub root_translation: Vec3,
    pub joint_rotations: Vec<Rotation>,
}

impl Pose {
    pub fn identity(joint_count: usize) -> Self {
        Pose {
            root_translation: Vec3::zeros(),
            joint_rotations: vec![Rotation::identity(); joint_count],
        }
    }
}

/// Output of forward kinematics: per-joint global transforms, with joint
/// positions (the translation parts) split out for convenience.
#[derive(Debug, Clone)]
pub struct FkResult {
    pub globals: Vec<RigidTransform>,
    pub positions: Vec<Vec3>,
}

/// Forward kinematics with the offset-then-rotate convention: a child's rest
/// offset is expressed in its parent's rotated frame,
/// `global(j) = global(parent) ∘ T(offset_j) ∘ R(rot_j)`.
/// The root uses the pose's translation directly.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<FkResult, KinematicsError> {
    if pose.joint_rotations.len() != skeleton.len() {
        return Err(KinematicsError::PoseMismatch {
            expected: skeleton.len(),
            got: pose.joint_rotations.len(),
        });
    }
    let mut globals = Vec::with_capacity(skeleton.len());
    globals.push(RigidTransform::new(
        pose.joint_rotations[0],
        pose.root_translation,
    ));
    for (i, joint) in skeleton.joints.iter().enumerate().skip(1) {
        let parent: RigidTransform = globals[joint.parent.expect("non-root joint")];
        globals.push(RigidTransform::new(
            parent.rotation * pose.joint_rotations[i],
            parent.translation + parent.rotation.apply(&joint.rest_offset),
        ));
    }
    let positions = globals.iter().map(|g| g.translation).collect();
    Ok(FkResult { globals, positions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn chain(offsets: &[Vec3]) -> Skeleton {
        let joints = offsets
            .iter()
            .enumerate()
            .map(|(i, o)| Joint {
                name: format!("j{i}"),
                parent: if i == 0 { None } else { Some(i - 1) },
                rest_offset: *o,
            })
            .collect();
        Skeleton::new(joints).unwrap()
    }

    #[test]
    fn identity_pose_accumulates_rest_offsets() {
        let sk = chain(&[
            Vec3::zeros(),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.5, 0.0),
        ]);
        let fk = forward_kinematics(&sk, &Pose::identity(3)).unwrap();
        assert_eq!(fk.positions[0], Vec3::zeros());
        assert_eq!(fk.positions[1], Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(fk.positions[2], Vec3::new(0.0, 1.5, 0.0));
    }

    #[test]
    fn root_rotation_swings_the_chain() {
        // two-joint chain, both offsets (0,1,0); rotating the root 90° about z
        // puts the second joint at (-1,0,0) and the chain tip at (-2,0,0).
        let sk = chain(&[Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]);
        let mut pose = Pose::identity(2);
        pose.joint_rotations[0] =
            Rotation::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 90f64.to_radians());
        let fk = forward_kinematics(&sk, &pose).unwrap();
        assert_abs_diff_eq!((fk.positions[1] - Vec3::new(-1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        let tip = fk.globals[1].apply(&Vec3::new(0.0, 1.0, 0.0));
        assert_abs_diff_eq!((tip - Vec3::new(-2.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pose_size_mismatch_errors() {
        let sk = chain(&[Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0)]);
        assert_eq!(
            forward_kinematics(&sk, &Pose::identity(3)).unwrap_err(),
            KinematicsError::PoseMismatch { expected: 2, got: 3 }
        );
    }

    #[test]
    fn skeleton_rejects_bad_topology() {
        assert!(Skeleton::new(vec![]).is_err());
        let two_roots = vec![
            Joint { name: "a".into(), parent: None, rest_offset: Vec3::zeros() },
            Joint { name: "b".into(), parent: None, rest_offset: Vec3::zeros() },
        ];
        assert!(Skeleton::new(two_roots).is_err());
        let forward_ref = vec![
            Joint { name: "a".into(), parent: None, rest_offset: Vec3::zeros() },
            Joint { name: "b".into(), parent: Some(1), rest_offset: Vec3::zeros() },
        ];
        assert!(Skeleton::new(forward_ref).is_err());
    }
}
