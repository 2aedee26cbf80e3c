//! Human-edited JSON formats for skeletons, meshes, marker layouts, and
//! camera rigs. Each format is a thin serde mirror of the in-memory type;
//! loading runs the full constructor validation, and unknown keys are
//! rejected so typos fail loudly. Round-trips are structural (JSON is not a
//! bulk format here; frame data lives in the binary formats).

use crate::{atomic_write, IoError};
use occluforge_core::{
    Joint, MarkerBinding, MarkerLayout, Skeleton, SkinnedMesh, Vec3,
};
use occluforge_sim::{Camera, CameraRig};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let json = serde_json::to_string_pretty(value).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    atomic_write(path, json.as_bytes())
}

// ---------------------------------------------------------------- skeleton

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointJson {
    name: String,
    /// Absent for the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<usize>,
    offset: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonJson {
    joints: Vec<JointJson>,
}

pub fn save_skeleton_json(path: &Path, skeleton: &Skeleton) -> Result<(), IoError> {
    let doc = SkeletonJson {
        joints: skeleton
            .joints()
            .iter()
            .map(|j| JointJson {
                name: j.name.clone(),
                parent: j.parent,
                offset: [j.rest_offset.x, j.rest_offset.y, j.rest_offset.z],
            })
            .collect(),
    };
    write_json(path, &doc)
}

pub fn load_skeleton_json(path: &Path) -> Result<Skeleton, IoError> {
    let doc: SkeletonJson = read_json(path)?;
    let joints = doc
        .joints
        .into_iter()
        .map(|j| Joint {
            name: j.name,
            parent: j.parent,
            rest_offset: Vec3::new(j.offset[0], j.offset[1], j.offset[2]),
        })
        .collect();
    Ok(Skeleton::new(joints)?)
}

// -------------------------------------------------------------------- mesh

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshJson {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    /// Per-vertex sparse skinning weights as (joint, weight) pairs.
    weights: Vec<Vec<(usize, f64)>>,
    joint_count: usize,
}

pub fn save_mesh_json(path: &Path, mesh: &SkinnedMesh) -> Result<(), IoError> {
    let doc = MeshJson {
        vertices: mesh.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
        triangles: mesh.triangles().to_vec(),
        weights: mesh.weights().to_vec(),
        joint_count: mesh.joint_count(),
    };
    write_json(path, &doc)
}

pub fn load_mesh_json(path: &Path) -> Result<SkinnedMesh, IoError> {
    let doc: MeshJson = read_json(path)?;
    let vertices = doc
        .vertices
        .iter()
        .map(|v| Vec3::new(v[0], v[1], v[2]))
        .collect();
    Ok(SkinnedMesh::new(
        vertices,
        doc.triangles,
        doc.weights,
        doc.joint_count,
    )?)
}

// ------------------------------------------------------------------ layout

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkerJson {
    name: String,
    triangle: usize,
    beta: f64,
    gamma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutJson {
    markers: Vec<MarkerJson>,
    key_markers: Vec<usize>,
}

pub fn save_layout_json(path: &Path, layout: &MarkerLayout) -> Result<(), IoError> {
    let doc = LayoutJson {
        markers: layout
            .names()
            .iter()
            .zip(layout.bindings())
            .map(|(name, b)| MarkerJson {
                name: name.clone(),
                triangle: b.triangle,
                beta: b.beta,
                gamma: b.gamma,
            })
            .collect(),
        key_markers: layout.key_markers().to_vec(),
    };
    write_json(path, &doc)
}

pub fn load_layout_json(path: &Path) -> Result<MarkerLayout, IoError> {
    let doc: LayoutJson = read_json(path)?;
    let (names, bindings) = doc
        .markers
        .into_iter()
        .map(|m| {
            (
                m.name,
                MarkerBinding {
                    triangle: m.triangle,
                    beta: m.beta,
                    gamma: m.gamma,
                },
            )
        })
        .unzip();
    Ok(MarkerLayout::new(names, bindings, doc.key_markers)?)
}

// --------------------------------------------------------------------- rig

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraJson {
    position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    look_at: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fov_deg: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigJson {
    cameras: Vec<CameraJson>,
}

pub fn save_rig_json(path: &Path, rig: &CameraRig) -> Result<(), IoError> {
    let doc = RigJson {
        cameras: rig
            .cameras()
            .iter()
            .map(|c| CameraJson {
                position: [c.position.x, c.position.y, c.position.z],
                look_at: c.look_at.map(|t| [t.x, t.y, t.z]),
                fov_deg: c.fov_deg,
            })
            .collect(),
    };
    write_json(path, &doc)
}

pub fn load_rig_json(path: &Path) -> Result<CameraRig, IoError> {
    let doc: RigJson = read_json(path)?;
    let cameras = doc
        .cameras
        .into_iter()
        .map(|c| Camera {
            position: Vec3::new(c.position[0], c.position[1], c.position[2]),
            look_at: c.look_at.map(|t| Vec3::new(t[0], t[1], t[2])),
            fov_deg: c.fov_deg,
        })
        .collect();
    Ok(CameraRig::new(cameras)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skeleton_round_trips_structurally() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skel.json");
        let skeleton = Skeleton::new(vec![
            Joint {
                name: "root".into(),
                parent: None,
                rest_offset: Vec3::zeros(),
            },
            Joint {
                name: "child".into(),
                parent: Some(0),
                rest_offset: Vec3::new(0.0, 0.25, 0.0),
            },
        ])
        .unwrap();
        save_skeleton_json(&path, &skeleton).unwrap();
        let reloaded = load_skeleton_json(&path).unwrap();
        assert_eq!(reloaded.len(), 2);
        assert_eq!(reloaded.joints()[1].name, "child");
        assert_eq!(reloaded.joints()[1].parent, Some(0));
        assert_eq!(reloaded.joints()[1].rest_offset, Vec3::new(0.0, 0.25, 0.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skel.json");
        std::fs::write(
            &path,
            r#"{"joints": [{"name": "root", "offset": [0,0,0], "color": "red"}]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_skeleton_json(&path),
            Err(IoError::Json { .. })
        ));
    }

    #[test]
    fn invalid_skeleton_fails_constructor_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skel.json");
        // Joint 1 claims itself as parent.
        std::fs::write(
            &path,
            r#"{"joints": [{"name": "root", "offset": [0,0,0]},
                           {"name": "bad", "parent": 1, "offset": [0,1,0]}]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_skeleton_json(&path),
            Err(IoError::Kinematics(_))
        ));
    }

    #[test]
    fn layout_round_trips_structurally() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layout.json");
        let layout = MarkerLayout::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                MarkerBinding { triangle: 0, beta: 0.2, gamma: 0.3 },
                MarkerBinding { triangle: 1, beta: 0.1, gamma: 0.1 },
                MarkerBinding { triangle: 2, beta: 0.4, gamma: 0.2 },
            ],
            vec![0, 2],
        )
        .unwrap();
        save_layout_json(&path, &layout).unwrap();
        let reloaded = load_layout_json(&path).unwrap();
        assert_eq!(reloaded.names(), layout.names());
        assert_eq!(reloaded.key_markers(), layout.key_markers());
        assert_eq!(reloaded.bindings()[1].triangle, 1);
    }

    #[test]
    fn rig_round_trips_structurally() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rig.json");
        let rig = CameraRig::new(vec![
            Camera {
                position: Vec3::new(2.0, 1.0, 0.0),
                look_at: Some(Vec3::new(0.0, 1.0, 0.0)),
                fov_deg: Some(70.0),
            },
            Camera::at(Vec3::new(-2.0, 1.0, 0.5)),
        ])
        .unwrap();
        save_rig_json(&path, &rig).unwrap();
        let reloaded = load_rig_json(&path).unwrap();
        assert_eq!(reloaded.cameras().len(), 2);
        assert_eq!(reloaded.cameras()[0].fov_deg, Some(70.0));
        assert_eq!(reloaded.cameras()[1].look_at, None);
        assert_eq!(reloaded.cameras()[1].position, Vec3::new(-2.0, 1.0, 0.5));
    }

    #[test]
    fn mesh_round_trips_structurally() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.json");
        let mesh = SkinnedMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
            vec![vec![(0, 1.0)], vec![(0, 1.0)], vec![(0, 0.5), (1, 0.5)]],
            2,
        )
        .unwrap();
        save_mesh_json(&path, &mesh).unwrap();
        let reloaded = load_mesh_json(&path).unwrap();
        assert_eq!(reloaded.vertices(), mesh.vertices());
        assert_eq!(reloaded.triangles(), mesh.triangles());
        assert_eq!(reloaded.weights(), mesh.weights());
        assert_eq!(reloaded.joint_count(), 2);
    }
}
