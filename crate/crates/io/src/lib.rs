//! File formats and dataset plumbing: JSON configs for human-edited assets,
//! compact little-endian binaries for bulk frame data, a hashed dataset
//! container, and a procedural toy-data generator that exercises the whole
//! simulate → corrupt → train pipeline at desk scale.
//!
//! Binary formats are bitwise round-trip stable: fixed endianness, explicit
//! layout, no platform-dependent padding. JSON formats round-trip
//! structurally. All writes go through [`atomic_write`], which stages into a
//! temp file in the destination directory and renames into place.

mod atomic;
mod checkpoint;
mod config;
mod container;
mod csvout;
mod json_types;
mod mask;
mod motion;
mod obj;
mod sequence;
mod toygen;

pub use atomic::{atomic_write, sha256_file, sha256_hex, RunManifest};
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, load_checkpoint_into,
    save_checkpoint, CheckpointBlock,
};
pub use config::{
    load_project_config, CorruptionConfig, ProjectConfig, RigVariation, SolverConfig, ToyConfig,
    TrainingConfig,
};
pub use container::{
    load_container, save_container, ContainerManifest, Dataset, ManifestEntry, CONTAINER_VERSION,
};
pub use csvout::{write_loss_curve_csv, write_named_floats_csv};
pub use json_types::{
    load_layout_json, load_mesh_json, load_rig_json, load_skeleton_json, save_layout_json,
    save_mesh_json, save_rig_json, save_skeleton_json,
};
pub use mask::{load_mask, mask_from_bytes, mask_to_bytes, save_mask};
pub use motion::{
    load_motion, motion_from_bytes, motion_to_bytes, save_motion, MotionClip, MotionFrame,
};
pub use obj::{load_obj, obj_from_str, obj_to_string, save_obj, ObjMesh};
pub use sequence::{load_sequence, save_sequence, sequence_from_bytes, sequence_to_bytes};
pub use toygen::{generate_toy_dataset, toy_scene, ToyDataset, ToyScene};

use std::path::PathBuf;

/// Unified error type for file I/O, parsing, and format validation.
///
/// Parse errors on binary payloads carry the byte offset at which the
/// violation was detected, so a corrupted file can be located with a hex
/// editor.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    BadMagic {
        expected: &'static str,
        found: [u8; 4],
    },
    #[error("unsupported version at byte {offset}: expected {expected}, found {found}")]
    BadVersion {
        expected: u32,
        found: u32,
        offset: u64,
    },
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("{expected} trailing bytes past the declared payload")]
    TrailingBytes { expected: u64 },
    #[error("non-finite value at byte {offset}")]
    NonFinite { offset: u64 },
    #[error("quaternion at frame {frame}, joint {joint} has norm {norm:.9}, beyond the 1e-6 renormalization band")]
    QuaternionNotUnit { frame: usize, joint: usize, norm: f64 },
    #[error("{path} line {line}: {message}")]
    ObjRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("hash mismatch for {name}: manifest says {expected}, file is {actual}")]
    HashMismatch {
        name: String,
        expected: String,
        actual: String,
    },
    #[error("invalid manifest: {0}")]
    BadManifest(String),
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Kinematics(#[from] occluforge_core::KinematicsError),
    #[error(transparent)]
    Geometry(#[from] occluforge_core::GeometryError),
    #[error(transparent)]
    Sim(#[from] occluforge_sim::SimError),
    #[error(transparent)]
    Solver(#[from] occluforge_solver::SolverError),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs (malformed files, schema
    /// violations) as opposed to environmental failures; drives the CLI's
    /// exit-code split between validation and runtime errors.
    pub fn is_validation(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}
