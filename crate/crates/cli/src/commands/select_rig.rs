//! `select-rig`: builds a family of candidate camera rigs around the
//! configured one and ranks them by how closely their simulated per-marker
//! occlusion distribution matches the configured rig's (KL divergence,
//! best match first).

use crate::ctx::Ctx;
use crate::error::CliError;
use crate::commands::simulate::MIN_CAMERAS;
use occluforge_core::Vec3;
use occluforge_io::{toy_scene, write_named_floats_csv};
use occluforge_sim::{
    occlusion_stats, select_camera_rigs, simulate_visibility, Camera, CameraRig, RankOrder, Scene,
};
use std::f64::consts::TAU;

/// Smoothing for the KL divergence between occlusion distributions; keeps
/// markers that are never occluded from producing empty bins.
const KL_SMOOTHING: f64 = 1e-3;

struct Candidate {
    rig: CameraRig,
    cameras: usize,
    azimuth_offset_deg: f64,
    distance: f64,
}

/// Ring rigs looking at `target`: candidate i rotates the ring by an evenly
/// spaced azimuth offset and cycles camera count and distance around the
/// configured values, so the family brackets the reference geometry.
fn candidate_rigs(ctx: &Ctx, target: Vec3, count: usize) -> Result<Vec<Candidate>, CliError> {
    let base_cameras = ctx.config.toy.cameras.max(2);
    let base_distance = ctx.config.toy.camera_distance;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let cameras = (base_cameras + i % 3).saturating_sub(1).max(2);
        let distance = base_distance * (0.8 + 0.2 * (i / 3 % 3) as f64);
        let azimuth_offset = i as f64 / count as f64 * TAU / base_cameras as f64;
        let mut cams = Vec::with_capacity(cameras);
        for c in 0..cameras {
            let azimuth = azimuth_offset + c as f64 / cameras as f64 * TAU;
            cams.push(Camera {
                position: Vec3::new(
                    target.x + distance * azimuth.cos(),
                    target.y,
                    target.z + distance * azimuth.sin(),
                ),
                look_at: Some(target),
                fov_deg: None,
            });
        }
        out.push(Candidate {
            rig: CameraRig::new(cams).map_err(CliError::validation)?,
            cameras,
            azimuth_offset_deg: azimuth_offset.to_degrees(),
            distance,
        });
    }
    Ok(out)
}

pub fn run(ctx: &Ctx, candidates: usize) -> Result<(), CliError> {
    if candidates == 0 {
        return Err(CliError::Validation(
            "need at least one candidate rig".into(),
        ));
    }
    let scene = toy_scene(&ctx.config.toy, ctx.seed, 0)?;
    let sim_scene = Scene {
        mesh: &scene.mesh,
        vertex_frames: &scene.vertex_frames,
        markers: &scene.markers,
    };

    // Reference distribution: the rig the scene was configured with.
    let reference_mask = simulate_visibility(&sim_scene, &scene.rig, MIN_CAMERAS)?;
    let reference = occlusion_stats(&reference_mask);

    let family = candidate_rigs(ctx, mean_position(&scene.reference_markers), candidates)?;
    let rigs: Vec<CameraRig> = family.iter().map(|c| c.rig.clone()).collect();
    let ranked = select_camera_rigs(
        &rigs,
        &sim_scene,
        &reference,
        candidates,
        RankOrder::Lowest,
        MIN_CAMERAS,
        KL_SMOOTHING,
    )?;

    println!(
        "{:>4} {:>9} {:>7} {:>11} {:>8} {:>12}",
        "rank", "candidate", "cameras", "azimuth_deg", "dist_m", "kl_div"
    );
    let mut rows = Vec::new();
    for (rank, (index, divergence)) in ranked.iter().enumerate() {
        let c = &family[*index];
        println!(
            "{rank:>4} {index:>9} {:>7} {:>11.2} {:>8.2} {divergence:>12.6}",
            c.cameras, c.azimuth_offset_deg, c.distance
        );
        rows.push((format!("rank_{rank:02}_candidate"), *index as f64));
        rows.push((format!("rank_{rank:02}_kl_divergence"), *divergence));
    }

    if let Some(out) = &ctx.out {
        write_named_floats_csv(out, &rows)?;
        ctx.write_manifest("select-rig", out, false, &[out.display().to_string()])?;
    }
    Ok(())
}

fn mean_position(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len().max(1) as f64
}
