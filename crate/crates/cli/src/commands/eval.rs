//! `eval`: runs a solver over a dataset split and reports position and
//! orientation error by occlusion-severity bucket.

use crate::commands::common::{
    build_position_solver, build_rotation_solver, load_dataset, load_weights, split_sequences,
};
use crate::ctx::Ctx;
use crate::error::CliError;
use crate::{Mode, Split};
use occluforge_eval::{evaluate, DecoupledPipeline, FrameSolver, MergedPipeline, OracleStub};
use occluforge_io::atomic_write;
use std::path::Path;

#[allow(clippy::too_many_arguments)]
pub fn run(
    ctx: &Ctx,
    input: &Path,
    checkpoints: Option<&Path>,
    mode: Mode,
    no_chain: bool,
    split: Split,
    oracle: bool,
) -> Result<(), CliError> {
    let dataset = load_dataset(input)?;
    let sequences = split_sequences(&dataset, split, ctx.config.training.holdout_fraction);
    if sequences.is_empty() {
        return Err(CliError::Validation(
            "selected split contains no frames".into(),
        ));
    }

    let solver: Box<dyn FrameSolver> = if oracle {
        Box::new(OracleStub)
    } else {
        let dir = checkpoints.ok_or_else(|| {
            CliError::Validation("--checkpoints is required unless --oracle is given".into())
        })?;
        match mode {
            Mode::Decoupled => {
                let mut position = build_position_solver(ctx, &dataset, no_chain, false)?;
                load_weights(dir, "position.ockp", position.params_mut())?;
                let mut rotation = build_rotation_solver(ctx, &dataset)?;
                load_weights(dir, "rotation.ockp", rotation.params_mut())?;
                Box::new(DecoupledPipeline::new(
                    position,
                    rotation,
                    dataset.layout.clone(),
                    dataset.reference_markers.clone(),
                    if no_chain { "decoupled (no-chain)" } else { "decoupled" },
                ))
            }
            Mode::Merged => {
                let mut solver = build_position_solver(ctx, &dataset, no_chain, true)?;
                load_weights(dir, "merged.ockp", solver.params_mut())?;
                Box::new(
                    MergedPipeline::new(
                        solver,
                        dataset.layout.clone(),
                        dataset.reference_markers.clone(),
                        if no_chain { "merged (no-chain)" } else { "merged" },
                    )
                    .map_err(CliError::validation)?,
                )
            }
        }
    };

    let report = evaluate(solver.as_ref(), &sequences).map_err(CliError::runtime)?;
    report.self_check().map_err(CliError::runtime)?;
    print!("{report}");

    if let Some(out) = &ctx.out {
        atomic_write(out, report.to_csv().as_bytes())?;
        ctx.write_manifest("eval", out, false, &[out.display().to_string()])?;
    }
    Ok(())
}
