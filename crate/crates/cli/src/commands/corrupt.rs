//! `corrupt`: rebuilds a container's input channel by re-corrupting the
//! ground-truth markers with the configured probabilities, leaving the
//! ground truth untouched.

use crate::commands::common::load_dataset;
use crate::ctx::Ctx;
use crate::error::CliError;
use occluforge_core::{MarkerFrame, MarkerSequence};
use occluforge_io::save_container;
use occluforge_sim::corrupt;
use std::path::Path;

pub fn run(ctx: &Ctx, input: &Path) -> Result<(), CliError> {
    let out = ctx.require_out("directory for the corrupted container")?;
    let mut dataset = load_dataset(input)?;
    let c = &ctx.config.corruption;

    let mut occluded_cells = 0usize;
    let mut total_cells = 0usize;
    for (s, frames) in dataset.sequences.iter_mut().enumerate() {
        if frames.is_empty() {
            continue;
        }
        let clean = MarkerSequence {
            frames: frames
                .iter()
                .map(|f| MarkerFrame::fully_visible(f.gt_markers.clone()))
                .collect(),
            hz: ctx.config.toy.hz,
        };
        // Per-sequence seed stream, mixed as the generator does, so adding
        // sequences never reshuffles earlier ones.
        let seed = ctx.seed.wrapping_add((s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (corrupted, _) = corrupt(
            &clean,
            c.occlusion_probability,
            c.shift_probability,
            c.shift_sigma,
            seed,
        )?;
        for (frame, new_input) in frames.iter_mut().zip(corrupted.frames) {
            occluded_cells += new_input.visibility.iter().filter(|v| !**v).count();
            total_cells += new_input.visibility.len();
            frame.input = new_input;
        }
    }

    let manifest = save_container(out, &dataset)?;
    let mut outputs: Vec<String> = manifest.files.iter().map(|f| f.name.clone()).collect();
    outputs.push("manifest.json".to_string());
    ctx.write_manifest("corrupt", out, true, &outputs)?;
    println!(
        "re-corrupted {} frames to {} (occluded fraction {:.4})",
        manifest.frames,
        out.display(),
        occluded_cells as f64 / total_cells.max(1) as f64
    );
    Ok(())
}
