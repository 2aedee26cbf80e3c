//! `simulate`: ray-traces camera visibility for the first sequence of the
//! configured toy scene and writes the packed mask.

use crate::ctx::Ctx;
use crate::error::CliError;
use occluforge_io::{save_mask, toy_scene};
use occluforge_sim::{simulate_visibility, Scene};

/// Cameras that must see a marker for it to count as visible.
pub const MIN_CAMERAS: usize = 2;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.require_out("file for the visibility mask")?;
    let scene = toy_scene(&ctx.config.toy, ctx.seed, 0)?;
    let mask = simulate_visibility(
        &Scene {
            mesh: &scene.mesh,
            vertex_frames: &scene.vertex_frames,
            markers: &scene.markers,
        },
        &scene.rig,
        MIN_CAMERAS,
    )?;
    save_mask(out, &mask.frames)?;
    ctx.write_manifest("simulate", out, false, &[out.display().to_string()])?;
    println!(
        "wrote {} frames x {} markers to {} (mean occluded fraction {:.4})",
        mask.frame_count(),
        mask.marker_count(),
        out.display(),
        mask.mean_occluded_fraction()
    );
    Ok(())
}
