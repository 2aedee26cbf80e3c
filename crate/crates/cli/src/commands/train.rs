//! `train`: fits the solvers to a dataset container and writes checkpoints
//! plus loss curves.

use crate::commands::common::{
    build_position_solver, build_rotation_solver, load_dataset, train_config, training_frames,
};
use crate::ctx::Ctx;
use crate::error::CliError;
use crate::Mode;
use occluforge_io::{save_checkpoint, write_loss_curve_csv};
use occluforge_solver::{train_merged, train_position, train_rotation, TrainReport};
use std::path::Path;
use std::time::Instant;

fn summarize(stage: &str, report: &TrainReport, elapsed_s: f64) {
    println!(
        "{stage}: {} steps in {elapsed_s:.1}s, final loss {:.6e}",
        report.steps, report.final_loss
    );
    if report.alignment_failures > 0 {
        println!(
            "{stage}: {} frames dropped (alignment underdetermined)",
            report.alignment_failures
        );
    }
}

pub fn run(ctx: &Ctx, input: &Path, mode: Mode, no_chain: bool) -> Result<(), CliError> {
    let out = ctx.require_out("directory for checkpoints and loss curves")?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let dataset = load_dataset(input)?;
    let frames = training_frames(&dataset, ctx.config.training.holdout_fraction);
    if frames.is_empty() {
        return Err(CliError::Validation(
            "holdout fraction leaves no training frames".into(),
        ));
    }
    println!(
        "training on {} frames ({} held out)",
        frames.len(),
        dataset.frame_count() - frames.len()
    );
    let config = train_config(ctx);
    let mut outputs = Vec::new();

    match mode {
        Mode::Decoupled => {
            let mut position = build_position_solver(ctx, &dataset, no_chain, false)?;
            let start = Instant::now();
            let report = train_position(&mut position, &frames, &config)
                .map_err(CliError::runtime)?;
            summarize("position", &report, start.elapsed().as_secs_f64());
            save_checkpoint(&out.join("position.ockp"), position.params())?;
            write_loss_curve_csv(&out.join("position_loss.csv"), &report.rows)?;
            outputs.push("position.ockp".to_string());
            outputs.push("position_loss.csv".to_string());

            let mut rotation = build_rotation_solver(ctx, &dataset)?;
            let start = Instant::now();
            let report = train_rotation(
                &mut rotation,
                &position,
                &frames,
                &dataset.layout,
                &dataset.reference_markers,
                &config,
            )
            .map_err(CliError::runtime)?;
            summarize("rotation", &report, start.elapsed().as_secs_f64());
            save_checkpoint(&out.join("rotation.ockp"), rotation.params())?;
            write_loss_curve_csv(&out.join("rotation_loss.csv"), &report.rows)?;
            outputs.push("rotation.ockp".to_string());
            outputs.push("rotation_loss.csv".to_string());
        }
        Mode::Merged => {
            let mut solver = build_position_solver(ctx, &dataset, no_chain, true)?;
            let start = Instant::now();
            let report = train_merged(
                &mut solver,
                &frames,
                &dataset.layout,
                &dataset.reference_markers,
                &config,
            )
            .map_err(CliError::runtime)?;
            summarize("merged", &report, start.elapsed().as_secs_f64());
            save_checkpoint(&out.join("merged.ockp"), solver.params())?;
            write_loss_curve_csv(&out.join("merged_loss.csv"), &report.rows)?;
            outputs.push("merged.ockp".to_string());
            outputs.push("merged_loss.csv".to_string());
        }
    }

    ctx.write_manifest("train", out, true, &outputs)?;
    Ok(())
}
