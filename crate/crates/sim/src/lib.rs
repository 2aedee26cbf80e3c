//! Occlusion synthesis for marker-based motion capture: BVH-accelerated
//! ray-traced visibility under the two-camera co-visibility rule, random
//! corruption, occlusion statistics, KL-divergence camera-rig selection,
//! oversampling, and severity bucketing.

mod bvh;
mod corrupt;
mod sampling;
mod stats;
mod visibility;

pub use bvh::{nearest_hit_brute, BvhAccel};
pub use corrupt::{corrupt, CorruptionRecord};
pub use sampling::{
    bucket_by_occlusion, oversample, severity_bucket, SeverityBucket, SEVERITY_THRESHOLDS,
};
pub use stats::{kl_divergence, occlusion_stats, select_camera_rigs, OcclusionStats, RankOrder};
pub use visibility::{
    camera_sees_marker, simulate_visibility, Camera, CameraRig, Scene, VisibilityMask,
};

use thiserror::Error;

/// Mesh hits closer to the camera than the marker by less than this margin
/// (meters) are ignored, so a marker seated on the mesh surface is not
/// occluded by its own triangle.
pub const SKIN_EPS: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("invalid camera rig: {0}")]
    InvalidRig(String),
    #[error("sequence has {frames} frames but {meshes} mesh frames were supplied")]
    FrameMismatch { frames: usize, meshes: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("distributions have support {p} vs {q}")]
    SupportMismatch { p: usize, q: usize },
    #[error("smoothing must be positive, got {0}")]
    InvalidSmoothing(f64),
    #[error("requested top-{k} of {candidates} candidate rigs")]
    NotEnoughCandidates { k: usize, candidates: usize },
    #[error("no sequence meets the occlusion threshold; nothing to oversample")]
    NothingToOversample,
    #[error("oversampling needs {needed} duplicates of {qualifying} sequences, exceeding the {cap}x cap")]
    OversampleCapExceeded {
        needed: usize,
        qualifying: usize,
        cap: usize,
    },
    #[error("target ratio {0} outside (0, 1)")]
    InvalidTargetRatio(f64),
}
