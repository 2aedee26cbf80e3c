//! `chain-report`: forwards one frame through the position solver and
//! reports, per joint, where its composed decoder attention comes from —
//! the marker-to-joint evidence chain.

use crate::commands::common::{build_position_solver, load_dataset, load_weights};
use crate::ctx::Ctx;
use crate::error::CliError;
use occluforge_core::centralize;
use occluforge_io::write_named_floats_csv;
use occluforge_solver::{chain_report, TokenKind};
use std::path::Path;

/// Sources printed per joint; the CSV gets all of them.
const TOP_K: usize = 5;

fn token_label(kind: TokenKind) -> String {
    match kind {
        TokenKind::Marker(m) => format!("marker_{m:02}"),
        TokenKind::Joint(j) => format!("joint_{j}"),
    }
}

pub fn run(
    ctx: &Ctx,
    input: &Path,
    checkpoints: Option<&Path>,
    frame: usize,
    no_chain: bool,
) -> Result<(), CliError> {
    let dataset = load_dataset(input)?;
    let frames = dataset.all_frames();
    let picked = frames.get(frame).ok_or_else(|| {
        CliError::Validation(format!(
            "frame {frame} out of range: dataset has {} frames",
            frames.len()
        ))
    })?;

    let mut solver = build_position_solver(ctx, &dataset, no_chain, false)?;
    if let Some(dir) = checkpoints {
        load_weights(dir, "position.ockp", solver.params_mut())?;
    }

    let (centered, _) = centralize(&picked.input).map_err(CliError::validation)?;
    let out = solver.forward(&centered).map_err(CliError::runtime)?;
    let markers = dataset.marker_count();

    let occluded: Vec<usize> = picked
        .input
        .visibility
        .iter()
        .enumerate()
        .filter(|(_, v)| !**v)
        .map(|(m, _)| m)
        .collect();
    println!(
        "frame {frame}: {} of {markers} markers occluded {occluded:?}",
        occluded.len()
    );

    let mut rows = Vec::new();
    for j in 0..dataset.joint_count() {
        let entries = chain_report(&out.chain, markers + j, None);
        let shown: Vec<String> = entries
            .iter()
            .take(TOP_K)
            .map(|e| format!("{} {:.4}", token_label(e.source), e.weight))
            .collect();
        println!("joint {j}: {}", shown.join(", "));
        for (rank, entry) in entries.iter().enumerate() {
            rows.push((
                format!("joint_{j}_rank_{rank:02}_{}", token_label(entry.source)),
                entry.weight,
            ));
        }
    }

    if let Some(out_path) = &ctx.out {
        write_named_floats_csv(out_path, &rows)?;
        ctx.write_manifest(
            "chain-report",
            out_path,
            false,
            &[out_path.display().to_string()],
        )?;
    }
    Ok(())
}
