//! Procedural toy dataset: an articulated chain wrapped in a skinned tube,
//! animated with smooth seeded sinusoids, observed by a ray-traced camera
//! rig, and corrupted into training input. Desk-scale, but it exercises the
//! full pipeline — skinning, marker binding, co-visibility, corruption — so
//! end-to-end behavior can be tested without external assets.
//!
//! Everything is keyed off one seed: per-sequence RNG streams are derived by
//! mixing the sequence index into it, so regenerating with the same config
//! reproduces every byte of the container.

use crate::config::ToyConfig;
use crate::{CorruptionConfig, Dataset, IoError};
use occluforge_core::{
    forward_kinematics, lbs_deform, markers_from_mesh, Joint, MarkerBinding, MarkerFrame,
    MarkerLayout, MarkerSequence, Pose, Rotation, Skeleton, SkinnedMesh, Vec3,
};
use occluforge_sim::{corrupt, simulate_visibility, Camera, CameraRig, Scene};
use occluforge_solver::TrainingFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Tube cross-section vertices per ring.
const RING_SIDES: usize = 8;
/// Total chain length, meters (desk scale).
const CHAIN_LENGTH: f64 = 1.0;
/// Tube radius, meters.
const TUBE_RADIUS: f64 = 0.07;
/// Golden angle in radians; successive sequences rotate the camera ring by
/// this so no two sequences share an occlusion geometry.
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// A generated dataset plus the geometry and diagnostics that are useful for
/// tests but not persisted in the container.
#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub dataset: Dataset,
    pub mesh: SkinnedMesh,
    /// Azimuth of each marker around the tube in degrees, for reasoning
    /// about which side of the tube a marker sits on.
    pub marker_azimuths_deg: Vec<f64>,
    /// Per-marker fraction of frames occluded in the final input (ray-traced
    /// mask plus random corruption), across all sequences.
    pub marker_occlusion: Vec<f64>,
    /// Per-sequence mean occluded fraction of the final input.
    pub sequence_occlusion: Vec<f64>,
}

/// Chain skeleton: joint 0 at the origin, the rest stacked along +y with
/// equal offsets summing to [`CHAIN_LENGTH`].
fn chain_skeleton(joints: usize) -> Result<Skeleton, IoError> {
    let segment = CHAIN_LENGTH / (joints - 1) as f64;
    let mut list = vec![Joint {
        name: "j0".into(),
        parent: None,
        rest_offset: Vec3::zeros(),
    }];
    for j in 1..joints {
        list.push(Joint {
            name: format!("j{j}"),
            parent: Some(j - 1),
            rest_offset: Vec3::new(0.0, segment, 0.0),
        });
    }
    Ok(Skeleton::new(list)?)
}

/// Skinning weight for a ring at height `h`: nearest joint owns the ends of
/// each segment outright and only the middle 40% blends, which keeps the
/// rings that sit exactly on a joint rigid — in particular the root ring
/// that carries the key markers.
fn ring_weights(h: f64, joints: usize) -> Vec<(usize, f64)> {
    let segment = CHAIN_LENGTH / (joints - 1) as f64;
    let s = (h / segment).clamp(0.0, (joints - 1) as f64);
    let j = (s.floor() as usize).min(joints - 2);
    let u = s - j as f64;
    let blended = ((u - 0.3) / 0.4).clamp(0.0, 1.0);
    if blended == 0.0 {
        vec![(j, 1.0)]
    } else if blended == 1.0 {
        vec![(j + 1, 1.0)]
    } else {
        vec![(j, 1.0 - blended), (j + 1, blended)]
    }
}

struct TubeMesh {
    mesh: SkinnedMesh,
    /// Ring count along the chain (excluding cap centers).
    rings: usize,
}

/// Builds the tube: one ring per joint and per segment midpoint, quad bands
/// between consecutive rings (two triangles per quad, band-major), then two
/// cap fans. Band triangle `2*(band*RING_SIDES + k)` has the ring-`band`
/// vertex at azimuth `k` as its first corner, which is what marker bindings
/// rely on.
fn tube_mesh(joints: usize) -> Result<TubeMesh, IoError> {
    let rings = 2 * (joints - 1) + 1;
    let ring_step = CHAIN_LENGTH / (rings - 1) as f64;
    let mut vertices = Vec::with_capacity(rings * RING_SIDES + 2);
    let mut weights = Vec::with_capacity(rings * RING_SIDES + 2);
    for r in 0..rings {
        let h = r as f64 * ring_step;
        let w = ring_weights(h, joints);
        for k in 0..RING_SIDES {
            let theta = k as f64 / RING_SIDES as f64 * TAU;
            vertices.push(Vec3::new(
                TUBE_RADIUS * theta.cos(),
                h,
                TUBE_RADIUS * theta.sin(),
            ));
            weights.push(w.clone());
        }
    }
    let bottom_center = vertices.len();
    vertices.push(Vec3::new(0.0, -0.03, 0.0));
    weights.push(vec![(0, 1.0)]);
    let top_center = vertices.len();
    vertices.push(Vec3::new(0.0, CHAIN_LENGTH + 0.03, 0.0));
    weights.push(vec![(joints - 1, 1.0)]);

    let ring_vertex = |r: usize, k: usize| r * RING_SIDES + k % RING_SIDES;
    let mut triangles = Vec::with_capacity((rings - 1) * RING_SIDES * 2 + 2 * RING_SIDES);
    for band in 0..rings - 1 {
        for k in 0..RING_SIDES {
            let v00 = ring_vertex(band, k);
            let v01 = ring_vertex(band, k + 1);
            let v10 = ring_vertex(band + 1, k);
            let v11 = ring_vertex(band + 1, k + 1);
            triangles.push([v00, v01, v11]);
            triangles.push([v00, v11, v10]);
        }
    }
    for k in 0..RING_SIDES {
        triangles.push([bottom_center, ring_vertex(0, k + 1), ring_vertex(0, k)]);
        triangles.push([top_center, ring_vertex(rings - 1, k), ring_vertex(rings - 1, k + 1)]);
    }
    let mesh = SkinnedMesh::new(vertices, triangles, weights, joints)?;
    Ok(TubeMesh { mesh, rings })
}

/// Binding that evaluates exactly to the tube vertex at `(ring, azimuth)`.
fn vertex_binding(ring: usize, azimuth: usize, rings: usize) -> MarkerBinding {
    if ring < rings - 1 {
        // First corner of the first triangle of quad (ring, azimuth).
        MarkerBinding {
            triangle: 2 * (ring * RING_SIDES + azimuth),
            beta: 0.0,
            gamma: 0.0,
        }
    } else {
        // Top ring: third corner of the second triangle one band below.
        MarkerBinding {
            triangle: 2 * ((ring - 1) * RING_SIDES + azimuth) + 1,
            beta: 0.0,
            gamma: 1.0,
        }
    }
}

/// Marker placement: four key markers around the rigid root ring, the rest
/// spread deterministically over higher rings and azimuths.
fn marker_plan(markers: usize, rings: usize) -> (MarkerLayout, Vec<f64>) {
    let mut names = Vec::with_capacity(markers);
    let mut bindings = Vec::with_capacity(markers);
    let mut azimuths = Vec::with_capacity(markers);
    let key_azimuths = [0usize, 2, 4, 6];
    let key_names = ["key_front", "key_left", "key_back", "key_right"];
    for (name, &a) in key_names.iter().zip(&key_azimuths) {
        names.push((*name).to_string());
        bindings.push(vertex_binding(0, a, rings));
        azimuths.push(a as f64 / RING_SIDES as f64 * 360.0);
    }
    for i in 4..markers {
        let ring = 1 + (i - 4) % (rings - 1);
        let azimuth = (i - 4) * 3 % RING_SIDES;
        names.push(format!("m{i:02}"));
        bindings.push(vertex_binding(ring, azimuth, rings));
        azimuths.push(azimuth as f64 / RING_SIDES as f64 * 360.0);
    }
    let layout = MarkerLayout::new(names, bindings, vec![0, 1, 2, 3])
        .expect("generated layout is structurally valid");
    (layout, azimuths)
}

/// Smooth seeded motion for one sequence: two superposed sinusoids per
/// joint, a slow root yaw, and a gentle root-translation wander, all scaled
/// by `richness`. Zero richness freezes the identity pose.
struct MotionPlan {
    richness: f64,
    hz: f64,
    root_axis: Vec3,
    joint_axes: Vec<Vec3>,
    amplitudes: Vec<[f64; 2]>,
    frequencies: Vec<[f64; 2]>,
    phases: Vec<[f64; 2]>,
}

impl MotionPlan {
    fn sample(rng: &mut ChaCha8Rng, joints: usize, richness: f64, hz: f64) -> Self {
        let random_axis = |rng: &mut ChaCha8Rng| loop {
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 {
                return v / n;
            }
        };
        let mut joint_axes = Vec::with_capacity(joints);
        let mut amplitudes = Vec::with_capacity(joints);
        let mut frequencies = Vec::with_capacity(joints);
        let mut phases = Vec::with_capacity(joints);
        for j in 0..joints {
            joint_axes.push(random_axis(rng));
            let scale = if j == 0 { 0.5 } else { 0.35 };
            amplitudes.push([
                rng.gen_range(0.3..1.0) * scale,
                rng.gen_range(0.1..0.4) * scale,
            ]);
            frequencies.push([rng.gen_range(0.2..0.7), rng.gen_range(0.7..1.5)]);
            phases.push([rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)]);
        }
        MotionPlan {
            richness,
            hz,
            root_axis: Vec3::new(0.0, 1.0, 0.0),
            joint_axes,
            amplitudes,
            frequencies,
            phases,
        }
    }

    fn pose(&self, frame: usize) -> Pose {
        let t = frame as f64 / self.hz;
        let joints = self.joint_axes.len();
        let mut joint_rotations = Vec::with_capacity(joints);
        for j in 0..joints {
            let angle = self.richness
                * (self.amplitudes[j][0] * (TAU * self.frequencies[j][0] * t + self.phases[j][0]).sin()
                    + self.amplitudes[j][1]
                        * (TAU * self.frequencies[j][1] * t + self.phases[j][1]).sin());
            let axis = if j == 0 {
                // The root mostly yaws, with a slight wobble off-axis.
                (self.root_axis + 0.2 * self.joint_axes[0]).normalize()
            } else {
                self.joint_axes[j]
            };
            joint_rotations.push(Rotation::from_axis_angle(axis, angle));
        }
        let wander = self.richness * 0.15;
        let root_translation = Vec3::new(
            wander * (TAU * 0.23 * t).sin(),
            wander * 0.3 * (TAU * 0.31 * t + 1.0).sin(),
            wander * (TAU * 0.23 * t + 2.0).cos(),
        );
        Pose {
            root_translation,
            joint_rotations,
        }
    }
}

/// Camera ring (or one-sided arc) at mid-chain height. `azimuth_offset`
/// rotates the whole rig; sequences use different offsets so the geometric
/// occlusion pattern varies across the dataset.
fn build_rig(config: &ToyConfig, azimuth_offset: f64) -> Result<CameraRig, IoError> {
    let target = Vec3::new(0.0, CHAIN_LENGTH / 2.0, 0.0);
    let mut cameras = Vec::with_capacity(config.cameras);
    for c in 0..config.cameras {
        let azimuth = if config.one_sided {
            // Pack the arc into ±45° around +x.
            let spread = if config.cameras == 1 {
                0.0
            } else {
                c as f64 / (config.cameras - 1) as f64 - 0.5
            };
            spread * (TAU / 4.0)
        } else {
            azimuth_offset + c as f64 / config.cameras as f64 * TAU
        };
        cameras.push(Camera {
            position: Vec3::new(
                config.camera_distance * azimuth.cos(),
                CHAIN_LENGTH / 2.0,
                config.camera_distance * azimuth.sin(),
            ),
            look_at: Some(target),
            fov_deg: None,
        });
    }
    Ok(CameraRig::new(cameras)?)
}

fn mix_seed(seed: u64, sequence: usize) -> u64 {
    seed.wrapping_add((sequence as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Frames allocated to sequence `s`: the total is split as evenly as
/// possible, with the remainder going to the earliest sequences.
fn sequence_frame_count(config: &ToyConfig, s: usize) -> usize {
    config.frames / config.sequences + usize::from(s < config.frames % config.sequences)
}

fn validate_toy_config(config: &ToyConfig) -> Result<(), IoError> {
    if config.joints < 2 {
        return Err(IoError::BadManifest(format!(
            "toy generator needs a chain of at least 2 joints, got {}",
            config.joints
        )));
    }
    if config.markers < 4 {
        return Err(IoError::BadManifest(format!(
            "toy generator needs at least 4 markers, got {}",
            config.markers
        )));
    }
    Ok(())
}

/// Ground truth for one animated frame: marker positions, joint positions,
/// joint rotations.
type GtFrame = (Vec<Vec3>, Vec<Vec3>, Vec<Rotation>);

/// Poses the chain for every frame of a motion plan and records both the
/// deformed mesh (for ray tracing) and the ground-truth channels.
fn animate_sequence(
    skeleton: &Skeleton,
    mesh: &SkinnedMesh,
    layout: &MarkerLayout,
    plan: &MotionPlan,
    frame_count: usize,
) -> Result<(Vec<GtFrame>, Vec<Vec<Vec3>>), IoError> {
    let mut gt_frames = Vec::with_capacity(frame_count);
    let mut vertex_frames = Vec::with_capacity(frame_count);
    for f in 0..frame_count {
        let pose = plan.pose(f);
        let fk = forward_kinematics(skeleton, &pose)?;
        let vertices = lbs_deform(mesh, skeleton, &fk)?;
        let markers = markers_from_mesh(layout, mesh, &vertices)?;
        gt_frames.push((markers, fk.positions, pose.joint_rotations));
        vertex_frames.push(vertices);
    }
    Ok((gt_frames, vertex_frames))
}

/// One sequence of the toy scene in ray-traceable form: the static pieces
/// plus the animated mesh and ground-truth markers, and the camera rig that
/// sequence would be observed with. For visibility simulation and rig
/// studies outside the generator.
#[derive(Debug, Clone)]
pub struct ToyScene {
    pub skeleton: Skeleton,
    pub mesh: SkinnedMesh,
    pub layout: MarkerLayout,
    pub reference_markers: Vec<Vec3>,
    /// Deformed mesh vertices per frame.
    pub vertex_frames: Vec<Vec<Vec3>>,
    /// Fully visible ground-truth marker positions per frame.
    pub markers: MarkerSequence,
    pub rig: CameraRig,
}

/// Rebuilds sequence `sequence` of the toy scene exactly as
/// [`generate_toy_dataset`] would animate it for the same `(config, seed)`.
pub fn toy_scene(config: &ToyConfig, seed: u64, sequence: usize) -> Result<ToyScene, IoError> {
    validate_toy_config(config)?;
    if sequence >= config.sequences {
        return Err(IoError::BadManifest(format!(
            "sequence {sequence} out of range: config has {} sequences",
            config.sequences
        )));
    }
    let frame_count = sequence_frame_count(config, sequence);
    if frame_count == 0 {
        return Err(IoError::BadManifest(format!(
            "sequence {sequence} has no frames ({} frames over {} sequences)",
            config.frames, config.sequences
        )));
    }
    let skeleton = chain_skeleton(config.joints)?;
    let tube = tube_mesh(config.joints)?;
    let (layout, _) = marker_plan(config.markers, tube.rings);
    let reference_markers = markers_from_mesh(&layout, &tube.mesh, tube.mesh.vertices())?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, sequence));
    let plan = MotionPlan::sample(&mut rng, config.joints, config.motion_richness, config.hz);
    let (gt_frames, vertex_frames) =
        animate_sequence(&skeleton, &tube.mesh, &layout, &plan, frame_count)?;
    let markers = MarkerSequence {
        frames: gt_frames
            .into_iter()
            .map(|(markers, _, _)| MarkerFrame::fully_visible(markers))
            .collect(),
        hz: config.hz,
    };
    let rig = build_rig(config, sequence as f64 * GOLDEN_ANGLE)?;
    Ok(ToyScene {
        skeleton,
        mesh: tube.mesh,
        layout,
        reference_markers,
        vertex_frames,
        markers,
        rig,
    })
}

/// Generates the full dataset. Deterministic for a fixed `(config,
/// corruption, seed)` triple, down to container hashes.
pub fn generate_toy_dataset(
    config: &ToyConfig,
    corruption: &CorruptionConfig,
    seed: u64,
) -> Result<ToyDataset, IoError> {
    validate_toy_config(config)?;
    let skeleton = chain_skeleton(config.joints)?;
    let tube = tube_mesh(config.joints)?;
    let (layout, marker_azimuths_deg) = marker_plan(config.markers, tube.rings);
    let reference_markers = markers_from_mesh(&layout, &tube.mesh, tube.mesh.vertices())?;

    let mut sequences = Vec::with_capacity(config.sequences);
    let mut sequence_occlusion = Vec::with_capacity(config.sequences);
    let mut marker_occluded_frames = vec![0usize; config.markers];
    for s in 0..config.sequences {
        let frame_count = sequence_frame_count(config, s);
        if frame_count == 0 {
            sequences.push(Vec::new());
            sequence_occlusion.push(0.0);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, s));
        let plan = MotionPlan::sample(&mut rng, config.joints, config.motion_richness, config.hz);
        let (gt_frames, vertex_frames) =
            animate_sequence(&skeleton, &tube.mesh, &layout, &plan, frame_count)?;

        let gt_sequence = MarkerSequence {
            frames: gt_frames
                .iter()
                .map(|(markers, _, _)| MarkerFrame::fully_visible(markers.clone()))
                .collect(),
            hz: config.hz,
        };
        let rig = build_rig(config, s as f64 * GOLDEN_ANGLE)?;
        let scene = Scene {
            mesh: &tube.mesh,
            vertex_frames: &vertex_frames,
            markers: &gt_sequence,
        };
        let mask = simulate_visibility(&scene, &rig, 2)?;

        // Overlay the ray-traced mask, then add random corruption. The
        // extra-occlusion sweep cycles over four severity levels so the
        // dataset populates all buckets.
        let masked = MarkerSequence {
            frames: gt_sequence
                .frames
                .iter()
                .enumerate()
                .map(|(f, frame)| {
                    let visibility = mask.frames[f].clone();
                    let positions = frame
                        .positions
                        .iter()
                        .zip(&visibility)
                        .map(|(p, &v)| if v { *p } else { Vec3::zeros() })
                        .collect();
                    MarkerFrame {
                        positions,
                        visibility,
                    }
                })
                .collect(),
            hz: config.hz,
        };
        let severity = (s % 4) as f64 / 3.0;
        let occl_prob =
            (corruption.occlusion_probability + severity * config.extra_occlusion_max).min(1.0);
        let (corrupted, _) = corrupt(
            &masked,
            occl_prob,
            corruption.shift_probability,
            corruption.shift_sigma,
            mix_seed(seed, s) ^ 0x5EED_C0DE,
        )?;

        let mut frames = Vec::with_capacity(frame_count);
        let mut occluded = 0usize;
        for (f, (markers, joints, rotations)) in gt_frames.into_iter().enumerate() {
            let input = corrupted.frames[f].clone();
            for (m, &visible) in input.visibility.iter().enumerate() {
                if !visible {
                    occluded += 1;
                    marker_occluded_frames[m] += 1;
                }
            }
            frames.push(TrainingFrame {
                input,
                gt_markers: markers,
                gt_joints: joints,
                gt_rotations: rotations,
            });
        }
        sequence_occlusion.push(occluded as f64 / (frame_count * config.markers) as f64);
        sequences.push(frames);
    }

    let total_frames: usize = sequences.iter().map(Vec::len).sum();
    let marker_occlusion = marker_occluded_frames
        .iter()
        .map(|&n| n as f64 / total_frames.max(1) as f64)
        .collect();

    Ok(ToyDataset {
        dataset: Dataset {
            skeleton,
            layout,
            reference_markers,
            sequences,
        },
        mesh: tube.mesh,
        marker_azimuths_deg,
        marker_occlusion,
        sequence_occlusion,
    })
}
