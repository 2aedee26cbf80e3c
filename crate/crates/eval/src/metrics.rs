//! Position and orientation error metrics.
//!
//! Internals work in meters; joint position error is reported in
//! centimeters, orientation error in degrees.

use occluforge_core::{geodesic_angle_deg, Rotation, Vec3};

use crate::EvalError;

/// Mean Euclidean joint distance for one frame, in centimeters.
pub fn jpe_frame(pred: &[Vec3], gt: &[Vec3]) -> Result<f64, EvalError> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(EvalError::ShapeMismatch {
            what: "joint positions",
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let mean_m = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| (p - g).norm())
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mean_m * 100.0)
}

/// Mean geodesic joint angle for one frame, in degrees.
pub fn joe_frame(pred: &[Rotation], gt: &[Rotation]) -> Result<f64, EvalError> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(EvalError::ShapeMismatch {
            what: "joint rotations",
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let sum: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| geodesic_angle_deg(p, g))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean JPE over a batch of frames (equal frame weights), in centimeters.
pub fn jpe(pred_frames: &[Vec<Vec3>], gt_frames: &[Vec<Vec3>]) -> Result<f64, EvalError> {
    if pred_frames.len() != gt_frames.len() || pred_frames.is_empty() {
        return Err(EvalError::ShapeMismatch {
            what: "frames",
            pred: pred_frames.len(),
            gt: gt_frames.len(),
        });
    }
    let mut sum = 0.0;
    for (p, g) in pred_frames.iter().zip(gt_frames) {
        sum += jpe_frame(p, g)?;
    }
    Ok(sum / pred_frames.len() as f64)
}

/// Mean JOE over a batch of frames (equal frame weights), in degrees.
pub fn joe(pred_frames: &[Vec<Rotation>], gt_frames: &[Vec<Rotation>]) -> Result<f64, EvalError> {
    if pred_frames.len() != gt_frames.len() || pred_frames.is_empty() {
        return Err(EvalError::ShapeMismatch {
            what: "frames",
            pred: pred_frames.len(),
            gt: gt_frames.len(),
        });
    }
    let mut sum = 0.0;
    for (p, g) in pred_frames.iter().zip(gt_frames) {
        sum += joe_frame(p, g)?;
    }
    Ok(sum / pred_frames.len() as f64)
}
