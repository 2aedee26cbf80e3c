//! Marker layouts bound to mesh surfaces, and marker-frame normalization.

use super::{KinematicsError, SkinnedMesh};
use crate::geometry::{barycentric_point, kabsch_align, RigidTransform};
use crate::Vec3;

/// A marker glued to one mesh triangle at fixed barycentric coordinates
/// `(1-β-γ, β, γ)`. The marker rides the triangle through deformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerBinding {
    pub triangle: usize,
    pub beta: f64,
    pub gamma: f64,
}

/// Named marker set with surface bindings. `key_markers` indexes the subset
/// used for rigid alignment (typically markers on a near-rigid body segment).
#[derive(Debug, Clone)]
pub struct MarkerLayout {
    names: Vec<String>,
    bindings: Vec<MarkerBinding>,
    key_markers: Vec<usize>,
}

impl MarkerLayout {
    pub fn new(
        names: Vec<String>,
        bindings: Vec<MarkerBinding>,
        key_markers: Vec<usize>,
    ) -> Result<Self, KinematicsError> {
        if names.is_empty() {
            return Err(KinematicsError::InvalidLayout("no markers".into()));
        }
        if names.len() != bindings.len() {
            return Err(KinematicsError::InvalidLayout(format!(
                "{} names for {} bindings",
                names.len(),
                bindings.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(KinematicsError::InvalidLayout(format!("marker {i} has an empty name")));
            }
            if names[..i].contains(name) {
                return Err(KinematicsError::InvalidLayout(format!("duplicate marker name {name:?}")));
            }
        }
        for (i, b) in bindings.iter().enumerate() {
            if b.beta < 0.0 || b.gamma < 0.0 || b.beta + b.gamma > 1.0 {
                return Err(KinematicsError::InvalidLayout(format!(
                    "marker {i} barycentric ({}, {}) outside the triangle",
                    b.beta, b.gamma
                )));
            }
        }
        for (i, &k) in key_markers.iter().enumerate() {
            if k >= names.len() {
                return Err(KinematicsError::InvalidLayout(format!(
                    "key marker index {k} out of range ({} markers)",
                    names.len()
                )));
            }
            if key_markers[..i].contains(&k) {
                return Err(KinematicsError::InvalidLayout(format!("duplicate key marker index {k}")));
            }
        }
        Ok(MarkerLayout {
            names,
            bindings,
            key_markers,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bindings(&self) -> &[MarkerBinding] {
        &self.bindings
    }

    pub fn key_markers(&self) -> &[usize] {
        &self.key_markers
    }

    pub fn marker_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Checks that every binding's triangle exists on `mesh`.
    pub fn validate_against(&self, mesh: &SkinnedMesh) -> Result<(), KinematicsError> {
        for (i, b) in self.bindings.iter().enumerate() {
            if b.triangle >= mesh.triangles().len() {
                return Err(KinematicsError::InvalidLayout(format!(
                    "marker {i} ({}) bound to triangle {} of {}",
                    self.names[i],
                    b.triangle,
                    mesh.triangles().len()
                )));
            }
        }
        Ok(())
    }
}

/// One captured frame: a position per marker plus a visibility flag.
/// Positions of occluded markers are conventionally zeroed and must not be
/// read as geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerFrame {
    pub positions: Vec<Vec3>,
    pub visibility: Vec<bool>,
}

impl MarkerFrame {
    pub fn fully_visible(positions: Vec<Vec3>) -> Self {
        let visibility = vec![true; positions.len()];
        MarkerFrame {
            positions,
            visibility,
        }
    }

    pub fn visible_count(&self) -> usize {
        self.visibility.iter().filter(|v| **v).count()
    }
}

/// A marker clip: frames sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSequence {
    pub frames: Vec<MarkerFrame>,
    pub hz: f64,
}

/// Evaluates every marker's bound barycentric point on the mesh posed at
/// `positions` (pass `mesh.vertices()` for the rest pose).
pub fn markers_from_mesh(
    layout: &MarkerLayout,
    mesh: &SkinnedMesh,
    positions: &[Vec3],
) -> Result<Vec<Vec3>, KinematicsError> {
    layout.validate_against(mesh)?;
    let triangles = mesh.triangles_at(positions);
    layout
        .bindings
        .iter()
        .map(|b| Ok(barycentric_point(&triangles[b.triangle], b.beta, b.gamma)?))
        .collect()
}

/// Subtracts the centroid of the *visible* markers from every visible
/// position; occluded slots are reset to zero. Returns the new frame and the
/// centroid that was removed. Errors when nothing is visible.
pub fn centralize(frame: &MarkerFrame) -> Result<(MarkerFrame, Vec3), KinematicsError> {
    let visible = frame.visible_count();
    if visible == 0 {
        return Err(KinematicsError::EmptyFrame);
    }
    let mut centroid = Vec3::zeros();
    for (p, &v) in frame.positions.iter().zip(&frame.visibility) {
        if v {
            centroid += p;
        }
    }
    centroid /= visible as f64;
    let positions = frame
        .positions
        .iter()
        .zip(&frame.visibility)
        .map(|(p, &v)| if v { p - centroid } else { Vec3::zeros() })
        .collect();
    Ok((
        MarkerFrame {
            positions,
            visibility: frame.visibility.clone(),
        },
        centroid,
    ))
}

/// Rigidly aligns a frame to reference key-marker positions (e.g. the rest
/// pose): Kabsch over the visible key markers, then the recovered transform
/// applied to every visible marker. Fewer than three visible key markers, or
/// a degenerate (collinear) set, yields `AlignmentUnderdetermined`.
pub fn align_to_tpose(
    frame: &MarkerFrame,
    layout: &MarkerLayout,
    reference: &[Vec3],
) -> Result<(MarkerFrame, RigidTransform), KinematicsError> {
    if reference.len() != layout.len() || frame.positions.len() != layout.len() {
        return Err(KinematicsError::InvalidLayout(format!(
            "frame has {} markers, reference {}, layout {}",
            frame.positions.len(),
            reference.len(),
            layout.len()
        )));
    }
    let mut source = Vec::new();
    let mut target = Vec::new();
    for &k in layout.key_markers() {
        if frame.visibility[k] {
            source.push(frame.positions[k]);
            target.push(reference[k]);
        }
    }
    let transform = kabsch_align(&source, &target)?;
    let positions = frame
        .positions
        .iter()
        .zip(&frame.visibility)
        .map(|(p, &v)| if v { transform.apply(p) } else { Vec3::zeros() })
        .collect();
    Ok((
        MarkerFrame {
            positions,
            visibility: frame.visibility.clone(),
        },
        transform,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square_layout() -> (MarkerLayout, Vec<Vec3>) {
        // four markers on the unit square's corners, key set = all four
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let names = (0..4).map(|i| format!("m{i}")).collect();
        let bindings = vec![
            MarkerBinding { triangle: 0, beta: 0.0, gamma: 0.0 };
            4
        ];
        let layout = MarkerLayout::new(names, bindings, vec![0, 1, 2, 3]).unwrap();
        (layout, positions)
    }

    #[test]
    fn centralize_removes_the_visible_centroid() {
        let (_, positions) = square_layout();
        let mut frame = MarkerFrame::fully_visible(positions);
        frame.visibility[3] = false;
        frame.positions[3] = Vec3::new(100.0, 100.0, 100.0); // must be ignored
        let (out, centroid) = centralize(&frame).unwrap();
        assert_abs_diff_eq!(
            (centroid - Vec3::new(2.0 / 3.0, 1.0 / 3.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(out.positions[3], Vec3::zeros());
        let mut sum = Vec3::zeros();
        for (p, &v) in out.positions.iter().zip(&out.visibility) {
            if v {
                sum += p;
            }
        }
        assert_abs_diff_eq!(sum.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn centralize_rejects_fully_occluded_frames() {
        let frame = MarkerFrame {
            positions: vec![Vec3::zeros(); 3],
            visibility: vec![false; 3],
        };
        assert_eq!(centralize(&frame).unwrap_err(), KinematicsError::EmptyFrame);
    }

    #[test]
    fn alignment_recovers_a_rigid_move() {
        let (layout, reference) = square_layout();
        let rot = crate::geometry::Rotation::from_axis_angle(
            Vec3::new(0.0, 0.0, 1.0),
            37f64.to_radians(),
        );
        let moved = RigidTransform::new(rot, Vec3::new(0.4, -0.2, 1.0));
        let frame = MarkerFrame::fully_visible(
            reference.iter().map(|p| moved.apply(p)).collect(),
        );
        let (aligned, recovered) = align_to_tpose(&frame, &layout, &reference).unwrap();
        for (a, r) in aligned.positions.iter().zip(&reference) {
            assert_abs_diff_eq!((a - r).norm(), 0.0, epsilon = 1e-9);
        }
        let should_be_identity = recovered.compose(&moved);
        assert_abs_diff_eq!(should_be_identity.translation.norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn alignment_needs_three_visible_key_markers() {
        let (layout, reference) = square_layout();
        let mut frame = MarkerFrame::fully_visible(reference.clone());
        frame.visibility[0] = false;
        frame.visibility[1] = false;
        let err = align_to_tpose(&frame, &layout, &reference).unwrap_err();
        assert!(err.is_underdetermined(), "got {err:?}");
    }

    #[test]
    fn layout_validation() {
        let names = vec!["a".into(), "b".into()];
        let ok = MarkerBinding { triangle: 0, beta: 0.2, gamma: 0.2 };
        let bad = MarkerBinding { triangle: 0, beta: 0.8, gamma: 0.6 };
        assert!(MarkerLayout::new(names.clone(), vec![ok; 2], vec![0]).is_ok());
        assert!(MarkerLayout::new(names.clone(), vec![ok, bad], vec![]).is_err());
        assert!(MarkerLayout::new(names.clone(), vec![ok; 2], vec![7]).is_err());
        assert!(MarkerLayout::new(names.clone(), vec![ok; 2], vec![0, 0]).is_err());
        assert!(MarkerLayout::new(vec!["a".into(), "a".into()], vec![ok; 2], vec![]).is_err());
        assert!(MarkerLayout::new(names, vec![ok], vec![]).is_err());
    }
}
