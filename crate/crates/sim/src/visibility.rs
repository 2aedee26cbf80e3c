//! Camera rigs and ray-traced marker visibility under the co-visibility
//! rule: a marker is reconstructible only when at least two cameras see it.

use crate::{BvhAccel, SimError, SKIN_EPS};
use occluforge_core::{MarkerSequence, Ray, SkinnedMesh, Vec3};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    /// Optical-axis target; required when a FOV cone is configured.
    pub look_at: Option<Vec3>,
    /// Full cone angle in degrees, in (0, 180]. `None` = omnidirectional.
    pub fov_deg: Option<f64>,
}

impl Camera {
    pub fn at(position: Vec3) -> Self {
        Camera {
            position,
            look_at: None,
            fov_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    cameras: Vec<Camera>,
}

impl CameraRig {
    /// Co-visibility needs two rays, so a rig has at least two cameras.
    pub fn new(cameras: Vec<Camera>) -> Result<Self, SimError> {
        if cameras.len() < 2 {
            return Err(SimError::InvalidRig(format!(
                "{} camera(s); co-visibility needs at least 2",
                cameras.len()
            )));
        }
        for (i, cam) in cameras.iter().enumerate() {
            if let Some(fov) = cam.fov_deg {
                if !(fov > 0.0 && fov <= 180.0) {
                    return Err(SimError::InvalidRig(format!(
                        "camera {i} fov {fov}° outside (0°, 180°]"
                    )));
                }
                match cam.look_at {
                    None => {
                        return Err(SimError::InvalidRig(format!(
                            "camera {i} has a fov but no look_at direction"
                        )))
                    }
                    Some(target) if (target - cam.position).norm() < 1e-12 => {
                        return Err(SimError::InvalidRig(format!(
                            "camera {i} look_at coincides with its position"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(CameraRig { cameras })
    }

    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }
}

/// Per-frame, per-marker visibility grid (`true` = visible) with the frame
/// rate of the driving sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMask {
    pub frames: Vec<Vec<bool>>,
    pub hz: f64,
}

impl VisibilityMask {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn marker_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }

    /// Fraction of markers occluded in frame `i`.
    pub fn occluded_fraction(&self, frame: usize) -> f64 {
        let row = &self.frames[frame];
        if row.is_empty() {
            return 0.0;
        }
        row.iter().filter(|v| !**v).count() as f64 / row.len() as f64
    }

    /// Mean over frames of the per-frame occluded fraction.
    pub fn mean_occluded_fraction(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        (0..self.frames.len())
            .map(|i| self.occluded_fraction(i))
            .sum::<f64>()
            / self.frames.len() as f64
    }
}

/// One frame's scene: the deformed mesh posed for that frame plus the marker
/// positions riding it.
pub struct Scene<'a> {
    pub mesh: &'a SkinnedMesh,
    /// Per-frame deformed vertex arrays, aligned with `markers.frames`.
    pub vertex_frames: &'a [Vec<Vec3>],
    pub markers: &'a MarkerSequence,
}

/// True when `camera` has an unobstructed line of sight to `marker_pos`:
/// no mesh hit strictly closer than the marker (minus the skin epsilon),
/// and the marker inside the FOV cone when one is configured.
pub fn camera_sees_marker(camera: &Camera, marker_pos: &Vec3, accel: &BvhAccel) -> bool {
    let to_marker = marker_pos - camera.position;
    let dist = to_marker.norm();
    if dist < SKIN_EPS {
        return true; // marker effectively at the aperture
    }
    if let (Some(target), Some(fov)) = (camera.look_at, camera.fov_deg) {
        let axis = target - camera.position;
        let cos = axis.dot(&to_marker) / (axis.norm() * dist);
        let half_fov = (fov / 2.0).to_radians();
        if cos.clamp(-1.0, 1.0).acos() > half_fov {
            return false;
        }
    }
    let ray = Ray::new(camera.position, to_marker);
    !accel.any_hit_before(&ray, dist - SKIN_EPS)
}

/// Ray-traces every camera/marker pair per frame; a marker is visible when
/// at least `min_cameras` cameras see it. Frames are independent and run in
/// parallel; results are ordered, so the mask is deterministic.
pub fn simulate_visibility(
    scene: &Scene,
    rig: &CameraRig,
    min_cameras: usize,
) -> Result<VisibilityMask, SimError> {
    if scene.markers.frames.len() != scene.vertex_frames.len() {
        return Err(SimError::FrameMismatch {
            frames: scene.markers.frames.len(),
            meshes: scene.vertex_frames.len(),
        });
    }
    let frames: Result<Vec<Vec<bool>>, SimError> = scene
        .markers
        .frames
        .par_iter()
        .zip(scene.vertex_frames.par_iter())
        .map(|(frame, vertices)| {
            let accel = BvhAccel::build(vertices, scene.mesh.triangles())?;
            Ok(frame
                .positions
                .iter()
                .map(|marker| {
                    let seen = rig
                        .cameras()
                        .iter()
                        .filter(|cam| camera_sees_marker(cam, marker, &accel))
                        .count();
                    seen >= min_cameras
                })
                .collect())
        })
        .collect();
    Ok(VisibilityMask {
        frames: frames?,
        hz: scene.markers.hz,
    })
}
