//! Linear blend skinning over a triangle mesh.

use super::{FkResult, KinematicsError, Skeleton};
use crate::geometry::Triangle;
use crate::Vec3;

/// Triangle mesh bound to a skeleton in its rest pose. Skinning weights are
/// stored sparsely per vertex as `(joint index, weight)` pairs.
#[derive(Debug, Clone)]
pub struct SkinnedMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    weights: Vec<Vec<(usize, f64)>>,
    joint_count: usize,
}

impl SkinnedMesh {
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        weights: Vec<Vec<(usize, f64)>>,
        joint_count: usize,
    ) -> Result<Self, KinematicsError> {
        if weights.len() != vertices.len() {
            return Err(KinematicsError::InvalidMesh(format!(
                "{} weight rows for {} vertices",
                weights.len(),
                vertices.len()
            )));
        }
        for (vi, tri) in triangles.iter().enumerate() {
            for &idx in tri {
                if idx >= vertices.len() {
                    return Err(KinematicsError::InvalidMesh(format!(
                        "triangle {vi} references vertex {idx} of {}",
                        vertices.len()
                    )));
                }
            }
        }
        for (vi, row) in weights.iter().enumerate() {
            if row.is_empty() {
                return Err(KinematicsError::InvalidMesh(format!(
                    "vertex {vi} has no skinning weights"
                )));
            }
            let mut sum = 0.0;
            for &(j, w) in row {
                if j >= joint_count {
                    return Err(KinematicsError::InvalidMesh(format!(
                        "vertex {vi} weighted to joint {j} of {joint_count}"
                    )));
                }
                if w < 0.0 {
                    return Err(KinematicsError::InvalidMesh(format!(
                        "vertex {vi} has negative weight {w} on joint {j}"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(KinematicsError::InvalidMesh(format!(
                    "vertex {vi} weights sum to {sum}, expected 1"
                )));
            }
        }
        Ok(SkinnedMesh {
            vertices,
            triangles,
            weights,
            joint_count,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn weights(&self) -> &[Vec<(usize, f64)>] {
        &self.weights
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    /// Triangles of the rest-pose mesh as geometry primitives.
    pub fn rest_triangles(&self) -> Vec<Triangle> {
        self.triangles_at(&self.vertices)
    }

    /// Triangles after substituting `positions` for the vertex array.
    pub fn triangles_at(&self, positions: &[Vec3]) -> Vec<Triangle> {
        self.triangles
            .iter()
            .map(|t| Triangle {
                v1: positions[t[0]],
                v2: positions[t[1]],
                v3: positions[t[2]],
            })
            .collect()
    }
}

/// Linear blend skinning: each posed vertex is
/// `v' = Σ_j w_j · G_j · B_j⁻¹ · v`, where `B_j` is joint j's rest global
/// transform and `G_j` its posed global transform.
pub fn lbs_deform(
    mesh: &SkinnedMesh,
    skeleton: &Skeleton,
    fk: &FkResult,
) -> Result<Vec<Vec3>, KinematicsError> {
    if mesh.joint_count != skeleton.len() || fk.globals.len() != skeleton.len() {
        return Err(KinematicsError::InvalidMesh(format!(
            "mesh skinned to {} joints, skeleton has {}, pose has {}",
            mesh.joint_count,
            skeleton.len(),
            fk.globals.len()
        )));
    }
    // Per-joint deformation G_j ∘ B_j⁻¹, computed once.
    let deforms: Vec<_> = fk
        .globals
        .iter()
        .zip(skeleton.rest_globals())
        .map(|(g, b)| g.compose(&b.inverse()))
        .collect();
    Ok(mesh
        .vertices
        .iter()
        .zip(&mesh.weights)
        .map(|(v, row)| {
            let mut out = Vec3::zeros();
            for &(j, w) in row {
                out += w * deforms[j].apply(v);
            }
            out
        })
        .collect())
}
