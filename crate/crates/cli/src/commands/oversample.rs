//! `oversample`: computes a seeded resampling plan that duplicates heavily
//! occluded sequences until they reach the target share of the dataset.

use crate::commands::common::load_dataset;
use crate::ctx::Ctx;
use crate::error::CliError;
use occluforge_io::write_named_floats_csv;
use occluforge_sim::oversample;
use std::path::Path;

/// Mean occluded-marker fraction of each sequence's input channel.
fn sequence_occlusion(sequences: &[Vec<occluforge_solver::TrainingFrame>]) -> Vec<f64> {
    sequences
        .iter()
        .map(|frames| {
            let mut cells = 0usize;
            let mut occluded = 0usize;
            for frame in frames {
                cells += frame.input.visibility.len();
                occluded += frame.input.visibility.iter().filter(|v| !**v).count();
            }
            if cells == 0 {
                0.0
            } else {
                occluded as f64 / cells as f64
            }
        })
        .collect()
}

pub fn run(ctx: &Ctx, input: &Path, threshold: f64, target_ratio: f64) -> Result<(), CliError> {
    let dataset = load_dataset(input)?;
    let means = sequence_occlusion(&dataset.sequences);
    let plan = oversample(&means, threshold, target_ratio, ctx.seed)?;

    let originals = dataset.sequences.len();
    let heavy_after = plan.iter().filter(|&&i| means[i] >= threshold).count();
    println!(
        "{} sequences -> {} slots; {} heavy (>= {:.2}) = {:.1}% of plan",
        originals,
        plan.len(),
        heavy_after,
        threshold,
        100.0 * heavy_after as f64 / plan.len() as f64
    );
    for (s, mean) in means.iter().enumerate() {
        let copies = plan.iter().filter(|&&i| i == s).count();
        println!("sequence {s}: mean occlusion {mean:.4}, {copies} copies");
    }

    if let Some(out) = &ctx.out {
        let rows: Vec<(String, f64)> = plan
            .iter()
            .enumerate()
            .map(|(slot, &seq)| (format!("slot_{slot:04}"), seq as f64))
            .collect();
        write_named_floats_csv(out, &rows)?;
        ctx.write_manifest("oversample", out, false, &[out.display().to_string()])?;
    }
    Ok(())
}
