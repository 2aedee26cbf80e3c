//! `gradcheck`: verifies the solvers' analytic gradients against central
//! finite differences on a small fixed model, sampling parameters uniformly
//! over each network. Exits nonzero if any loss exceeds the tolerance.

use crate::ctx::Ctx;
use crate::error::CliError;
use ndarray::{array, Array2};
use occluforge_core::{Rotation, Vec3};
use occluforge_io::write_named_floats_csv;
use occluforge_solver::{
    gradcheck_sampled, position_loss_on, rotation_loss_on, GradCheckReport, LossWeights,
    PositionModelConfig, PositionSolver, RotationSolver, RotationSolverConfig,
};

/// Maximum relative error between analytic and numeric derivatives.
pub const TOLERANCE: f64 = 1e-4;

fn small_config() -> PositionModelConfig {
    PositionModelConfig {
        width: 8,
        conv_blocks: 1,
        encoder_blocks: 1,
        decoder_blocks: 2,
        heads: 2,
        ..PositionModelConfig::new(5, 3)
    }
}

/// Five markers, two occluded; visible rows sum to zero per axis as the
/// solvers require.
fn test_frame() -> (Array2<f64>, Vec<bool>) {
    let coords = array![
        [0.2, 0.1, -0.3],
        [-0.1, 0.2, 0.1],
        [-0.1, -0.3, 0.2],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ];
    (coords, vec![true, true, true, false, false])
}

fn rotation_targets() -> Vec<Rotation> {
    vec![
        Rotation::from_axis_angle(Vec3::x(), 0.4),
        Rotation::from_axis_angle(Vec3::y(), -0.9),
        Rotation::from_axis_angle(Vec3::z(), 1.3),
    ]
}

fn report_line(name: &str, report: &GradCheckReport) -> bool {
    let pass = report.passes(TOLERANCE);
    println!(
        "gradcheck {name}: max relative error {:.3e} over {} samples ... {}",
        report.max_relative_error,
        report.samples,
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

pub fn run(ctx: &Ctx, samples: usize) -> Result<(), CliError> {
    if samples == 0 {
        return Err(CliError::Validation("--samples must be positive".into()));
    }
    let (coords, visibility) = test_frame();
    let gt_markers = Array2::from_shape_fn((5, 3), |(r, c)| 0.05 * r as f64 - 0.02 * c as f64);
    let gt_joints = Array2::from_shape_fn((3, 3), |(r, c)| 0.1 * (r + c) as f64);
    let occluded: Vec<bool> = visibility.iter().map(|v| !v).collect();
    let targets = rotation_targets();
    let weights = LossWeights::default();

    let position = PositionSolver::new(small_config(), ctx.seed).map_err(CliError::runtime)?;
    let position_report = gradcheck_sampled(position.params(), samples, ctx.seed, |p, g| {
        let fwd = position.forward_with(g, p, &coords, &visibility)?;
        let loss = position_loss_on(
            g,
            fwd.markers,
            fwd.joints,
            &gt_markers,
            &gt_joints,
            &occluded,
            weights,
        )?;
        Ok(loss.total)
    })
    .map_err(CliError::runtime)?;

    let rot_config = RotationSolverConfig {
        width: 8,
        blocks: 2,
        heads: 2,
        ..RotationSolverConfig::new(5, 3)
    };
    let rotation = RotationSolver::new(rot_config, ctx.seed ^ 1).map_err(CliError::runtime)?;
    let rot_coords = Array2::from_shape_fn((8, 3), |(r, c)| 0.1 * r as f64 - 0.07 * c as f64);
    let rotation_report = gradcheck_sampled(rotation.params(), samples, ctx.seed, |p, g| {
        let head = rotation.forward_with(g, p, &rot_coords)?;
        rotation_loss_on(g, head, &targets)
    })
    .map_err(CliError::runtime)?;

    let mut merged_config = small_config();
    merged_config.rotation_head = true;
    let merged = PositionSolver::new(merged_config, ctx.seed ^ 2).map_err(CliError::runtime)?;
    let merged_report = gradcheck_sampled(merged.params(), samples, ctx.seed, |p, g| {
        let fwd = merged.forward_with(g, p, &coords, &visibility)?;
        let position = position_loss_on(
            g,
            fwd.markers,
            fwd.joints,
            &gt_markers,
            &gt_joints,
            &occluded,
            weights,
        )?;
        let head = fwd.rotations6d.ok_or(occluforge_solver::SolverError::ContractViolation(
            "rotation head missing",
        ))?;
        let rot = rotation_loss_on(g, head, &targets)?;
        Ok(g.add(position.total, rot))
    })
    .map_err(CliError::runtime)?;

    let checks = [
        ("position_loss", &position_report),
        ("rotation_loss", &rotation_report),
        ("merged_loss", &merged_report),
    ];
    let mut all_pass = true;
    for (name, report) in &checks {
        all_pass &= report_line(name, report);
    }

    if let Some(out) = &ctx.out {
        let rows: Vec<(String, f64)> = checks
            .iter()
            .map(|(name, r)| (format!("{name}_max_relative_error"), r.max_relative_error))
            .collect();
        write_named_floats_csv(out, &rows)?;
        ctx.write_manifest("gradcheck", out, false, &[out.display().to_string()])?;
    }

    if all_pass {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "gradient check exceeded tolerance {TOLERANCE:e}"
        )))
    }
}
