//! Dataset container: a directory holding everything needed to train and
//! evaluate on one dataset — skeleton, marker layout, rest-pose reference
//! markers, and per-sequence OCSQ frame files — indexed by a manifest that
//! records the version string, counts, and a SHA-256 per file. Loading
//! verifies every hash, so a container is either intact or rejected.
//!
//! Because all member formats are deterministic, regenerating a dataset from
//! the same seed reproduces every file and therefore the manifest hash.

use crate::{
    atomic_write, load_layout_json, load_sequence, load_skeleton_json, save_layout_json,
    save_sequence, save_skeleton_json, sha256_file, IoError,
};
use occluforge_core::{MarkerLayout, Skeleton, Vec3};
use occluforge_solver::TrainingFrame;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONTAINER_VERSION: &str = "OCCLUFORGE-1";

/// One file tracked by the manifest, path relative to the container root.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Container index: version, counts, and the hashed file list.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ContainerManifest {
    pub version: String,
    pub markers: usize,
    pub joints: usize,
    pub sequences: usize,
    pub frames: usize,
    pub files: Vec<ManifestEntry>,
}

/// A loaded dataset: static rig description plus per-sequence frame data.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub skeleton: Skeleton,
    pub layout: MarkerLayout,
    /// Rest-pose marker positions, the alignment reference.
    pub reference_markers: Vec<Vec3>,
    pub sequences: Vec<Vec<TrainingFrame>>,
}

impl Dataset {
    pub fn marker_count(&self) -> usize {
        self.layout.len()
    }

    pub fn joint_count(&self) -> usize {
        self.skeleton.len()
    }

    pub fn frame_count(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    /// All frames of all sequences, flattened in order.
    pub fn all_frames(&self) -> Vec<TrainingFrame> {
        self.sequences.iter().flatten().cloned().collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceJson {
    markers: Vec<[f64; 3]>,
}

fn sequence_file_name(index: usize) -> String {
    format!("sequences/seq_{index:04}.ocsq")
}

/// Writes a dataset into `dir`, creating the manifest last so a complete
/// manifest implies complete contents.
pub fn save_container(dir: &Path, dataset: &Dataset) -> Result<ContainerManifest, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut files: Vec<ManifestEntry> = Vec::new();
    let mut track = |name: &str, dir: &Path| -> Result<(), IoError> {
        let path = dir.join(name);
        let meta = std::fs::metadata(&path).map_err(|e| IoError::io(&path, e))?;
        files.push(ManifestEntry {
            name: name.to_string(),
            sha256: sha256_file(&path)?,
            bytes: meta.len(),
        });
        Ok(())
    };

    save_skeleton_json(&dir.join("skeleton.json"), &dataset.skeleton)?;
    track("skeleton.json", dir)?;
    save_layout_json(&dir.join("layout.json"), &dataset.layout)?;
    track("layout.json", dir)?;
    let reference = ReferenceJson {
        markers: dataset
            .reference_markers
            .iter()
            .map(|v| [v.x, v.y, v.z])
            .collect(),
    };
    let reference_json = serde_json::to_string_pretty(&reference).map_err(|e| IoError::Json {
        path: dir.join("reference.json"),
        source: e,
    })?;
    atomic_write(&dir.join("reference.json"), reference_json.as_bytes())?;
    track("reference.json", dir)?;

    for (i, frames) in dataset.sequences.iter().enumerate() {
        let name = sequence_file_name(i);
        save_sequence(&dir.join(&name), frames)?;
        track(&name, dir)?;
    }

    let manifest = ContainerManifest {
        version: CONTAINER_VERSION.to_string(),
        markers: dataset.marker_count(),
        joints: dataset.joint_count(),
        sequences: dataset.sequences.len(),
        frames: dataset.frame_count(),
        files,
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| IoError::Json {
            path: dir.join("manifest.json"),
            source: e,
        })?;
    atomic_write(&dir.join("manifest.json"), manifest_json.as_bytes())?;
    Ok(manifest)
}

/// Loads and fully verifies a container: version string, per-file hashes,
/// and count consistency between the manifest and the actual contents.
pub fn load_container(dir: &Path) -> Result<Dataset, IoError> {
    let manifest_path = dir.join("manifest.json");
    let manifest_bytes =
        std::fs::read(&manifest_path).map_err(|e| IoError::io(&manifest_path, e))?;
    let manifest: ContainerManifest =
        serde_json::from_slice(&manifest_bytes).map_err(|e| IoError::Json {
            path: manifest_path.clone(),
            source: e,
        })?;
    if manifest.version != CONTAINER_VERSION {
        return Err(IoError::BadManifest(format!(
            "container version {:?}, this build reads {:?}",
            manifest.version, CONTAINER_VERSION
        )));
    }
    for entry in &manifest.files {
        let path = dir.join(&entry.name);
        let actual = sha256_file(&path)?;
        if actual != entry.sha256 {
            return Err(IoError::HashMismatch {
                name: entry.name.clone(),
                expected: entry.sha256.clone(),
                actual,
            });
        }
    }

    let skeleton = load_skeleton_json(&dir.join("skeleton.json"))?;
    let layout = load_layout_json(&dir.join("layout.json"))?;
    let reference_path = dir.join("reference.json");
    let reference_bytes =
        std::fs::read(&reference_path).map_err(|e| IoError::io(&reference_path, e))?;
    let reference: ReferenceJson =
        serde_json::from_slice(&reference_bytes).map_err(|e| IoError::Json {
            path: reference_path,
            source: e,
        })?;
    let reference_markers: Vec<Vec3> = reference
        .markers
        .iter()
        .map(|v| Vec3::new(v[0], v[1], v[2]))
        .collect();

    let mut sequences = Vec::with_capacity(manifest.sequences);
    for i in 0..manifest.sequences {
        sequences.push(load_sequence(&dir.join(sequence_file_name(i)))?);
    }

    let dataset = Dataset {
        skeleton,
        layout,
        reference_markers,
        sequences,
    };
    if dataset.marker_count() != manifest.markers
        || dataset.joint_count() != manifest.joints
        || dataset.frame_count() != manifest.frames
        || dataset.reference_markers.len() != manifest.markers
    {
        return Err(IoError::BadManifest(format!(
            "manifest counts (markers {}, joints {}, frames {}) disagree with contents \
             (markers {}, joints {}, frames {})",
            manifest.markers,
            manifest.joints,
            manifest.frames,
            dataset.marker_count(),
            dataset.joint_count(),
            dataset.frame_count(),
        )));
    }
    Ok(dataset)
}
