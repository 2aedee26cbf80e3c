//! `stats`: per-marker occlusion probabilities and run lengths of a saved
//! visibility mask.

use crate::ctx::Ctx;
use crate::error::CliError;
use occluforge_io::{load_mask, write_named_floats_csv};
use occluforge_sim::{occlusion_stats, VisibilityMask};
use std::path::Path;

pub fn run(ctx: &Ctx, input: &Path) -> Result<(), CliError> {
    let frames = load_mask(input)?;
    let mask = VisibilityMask {
        frames,
        hz: ctx.config.toy.hz,
    };
    let stats = occlusion_stats(&mask);

    println!("{:>8} {:>12} {:>8} {:>14} {:>13}", "marker", "p_occluded", "runs", "mean_run_len", "max_run_len");
    let mut rows = Vec::new();
    for m in 0..stats.marker_count() {
        let runs = stats.runs[m].len();
        let mean_run = stats.mean_run_length(m);
        let max_run = stats.runs[m].iter().copied().max().unwrap_or(0);
        println!(
            "{m:>8} {:>12.4} {runs:>8} {mean_run:>14.2} {max_run:>13}",
            stats.probabilities[m]
        );
        rows.push((format!("marker_{m:02}_p_occluded"), stats.probabilities[m]));
        rows.push((format!("marker_{m:02}_mean_run_len"), mean_run));
        rows.push((format!("marker_{m:02}_max_run_len"), max_run as f64));
    }
    println!(
        "overall mean occluded fraction: {:.4}",
        mask.mean_occluded_fraction()
    );

    if let Some(out) = &ctx.out {
        write_named_floats_csv(out, &rows)?;
        ctx.write_manifest("stats", out, false, &[out.display().to_string()])?;
    }
    Ok(())
}
