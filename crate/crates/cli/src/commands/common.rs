//! Helpers shared by the training, evaluation, and inspection commands:
//! model construction from the project configuration and dataset splitting.

use crate::ctx::{holdout_split, Ctx};
use crate::error::CliError;
use crate::Split;
use occluforge_eval::EvalSequence;
use occluforge_io::{load_checkpoint_into, load_container, Dataset, SolverConfig};
use occluforge_solver::{
    AdamConfig, LossWeights, PositionModelConfig, PositionSolver, RotationSolver,
    RotationSolverConfig, TrainConfig, TrainingFrame,
};
use std::path::Path;

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let dataset = load_container(path)?;
    if dataset.frame_count() == 0 {
        return Err(CliError::Validation(format!(
            "dataset {} has no frames",
            path.display()
        )));
    }
    Ok(dataset)
}

pub fn position_config(
    solver: &SolverConfig,
    markers: usize,
    joints: usize,
    no_chain: bool,
    rotation_head: bool,
) -> PositionModelConfig {
    PositionModelConfig {
        width: solver.width,
        conv_blocks: solver.conv_blocks,
        encoder_blocks: solver.encoder_blocks,
        decoder_blocks: solver.decoder_blocks,
        heads: solver.heads,
        no_chain,
        rotation_head,
        ..PositionModelConfig::new(markers, joints)
    }
}

pub fn rotation_config(solver: &SolverConfig, markers: usize, joints: usize) -> RotationSolverConfig {
    RotationSolverConfig {
        width: solver.rotation_width,
        blocks: solver.rotation_blocks,
        heads: solver.rotation_heads,
        ..RotationSolverConfig::new(markers, joints)
    }
}

pub fn train_config(ctx: &Ctx) -> TrainConfig {
    let t = &ctx.config.training;
    TrainConfig {
        steps: t.steps,
        batch_size: t.batch_size,
        seed: ctx.seed,
        deterministic: ctx.deterministic,
        weights: LossWeights {
            lambda1: t.lambda1,
            lambda2: t.lambda2,
            lambda3: t.lambda3,
        },
        adam: AdamConfig {
            learning_rate: t.learning_rate,
            final_lr_fraction: t.final_lr_fraction,
            clip_norm: t.clip_norm,
            ..AdamConfig::default()
        },
        log_every: t.log_every,
    }
}

/// Splits every sequence into train/holdout frames by the configured
/// fraction. Sequence identity is preserved so severity bucketing still
/// sees whole sequences.
pub fn split_sequences(dataset: &Dataset, split: Split, fraction: f64) -> Vec<EvalSequence> {
    dataset
        .sequences
        .iter()
        .map(|frames| {
            let mask = holdout_split(frames.len(), fraction);
            let kept = frames
                .iter()
                .zip(&mask)
                .filter(|(_, held)| match split {
                    Split::All => true,
                    Split::Holdout => **held,
                    Split::Train => !**held,
                })
                .map(|(f, _)| f.clone())
                .collect();
            EvalSequence { frames: kept }
        })
        .filter(|s| !s.frames.is_empty())
        .collect()
}

/// The flattened training-side frames (everything not held out).
pub fn training_frames(dataset: &Dataset, fraction: f64) -> Vec<TrainingFrame> {
    split_sequences(dataset, Split::Train, fraction)
        .into_iter()
        .flat_map(|s| s.frames)
        .collect()
}

pub fn build_position_solver(
    ctx: &Ctx,
    dataset: &Dataset,
    no_chain: bool,
    rotation_head: bool,
) -> Result<PositionSolver, CliError> {
    let config = position_config(
        &ctx.config.solver,
        dataset.marker_count(),
        dataset.joint_count(),
        no_chain,
        rotation_head,
    );
    PositionSolver::new(config, ctx.seed).map_err(CliError::validation)
}

pub fn build_rotation_solver(ctx: &Ctx, dataset: &Dataset) -> Result<RotationSolver, CliError> {
    let config = rotation_config(
        &ctx.config.solver,
        dataset.marker_count(),
        dataset.joint_count(),
    );
    RotationSolver::new(config, ctx.seed ^ 1).map_err(CliError::validation)
}

/// Loads `name` from the checkpoint directory into the parameter store.
pub fn load_weights(
    dir: &Path,
    name: &str,
    params: &mut occluforge_solver::Parameters,
) -> Result<(), CliError> {
    let path = dir.join(name);
    load_checkpoint_into(&path, params).map_err(|e| match e {
        e if e.is_validation() => CliError::Validation(format!("{}: {e}", path.display())),
        e => CliError::runtime(e),
    })
}
