//! Position and rotation losses, each in two forms: plain-array functions
//! for evaluation and tape builders for training. The two forms compute the
//! same quantity; a cross-test in the crate's test suite pins that.

use crate::graph::{Graph, Var};
use crate::SolverError;
use ndarray::Array2;
use occluforge_core::{Rotation, Vec3};

/// Weights (λ₁, λ₂, λ₃) of the position loss terms: occluded-marker,
/// shifted-marker, and joint distance. Defaults to (1, 1, 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 2.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Self {
        assert!(
            lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0,
            "loss weights must be non-negative"
        );
        LossWeights { lambda1, lambda2, lambda3 }
    }
}

/// Breakdown of one position-loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionLossTerms {
    /// Mean Euclidean error over markers occluded in the input; 0 if none.
    pub marker_occluded: f64,
    /// Mean Euclidean error over non-occluded markers; 0 if none.
    pub marker_shifted: f64,
    /// Mean Euclidean error over joints.
    pub joint: f64,
    /// λ₁·occluded + λ₂·shifted + λ₃·joint.
    pub total: f64,
}

fn mean_distance(pred: &[Vec3], gt: &[Vec3], select: impl Fn(usize) -> bool) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if select(i) {
            sum += (p - g).norm();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Position loss over one frame. `occluded[i]` says marker `i` was occluded
/// in the network input, which routes it to the occluded term instead of
/// the shifted term.
pub fn position_loss(
    pred_markers: &[Vec3],
    pred_joints: &[Vec3],
    gt_markers: &[Vec3],
    gt_joints: &[Vec3],
    occluded: &[bool],
    weights: LossWeights,
) -> PositionLossTerms {
    assert_eq!(pred_markers.len(), gt_markers.len(), "marker count mismatch");
    assert_eq!(pred_joints.len(), gt_joints.len(), "joint count mismatch");
    assert_eq!(pred_markers.len(), occluded.len(), "occlusion record mismatch");
    let marker_occluded = mean_distance(pred_markers, gt_markers, |i| occluded[i]);
    let marker_shifted = mean_distance(pred_markers, gt_markers, |i| !occluded[i]);
    let joint = mean_distance(pred_joints, gt_joints, |_| true);
    PositionLossTerms {
        marker_occluded,
        marker_shifted,
        joint,
        total: weights.lambda1 * marker_occluded
            + weights.lambda2 * marker_shifted
            + weights.lambda3 * joint,
    }
}

/// Convenience: just the weighted total.
pub fn position_loss_terms(
    pred_markers: &[Vec3],
    pred_joints: &[Vec3],
    gt_markers: &[Vec3],
    gt_joints: &[Vec3],
    occluded: &[bool],
) -> PositionLossTerms {
    position_loss(
        pred_markers,
        pred_joints,
        gt_markers,
        gt_joints,
        occluded,
        LossWeights::default(),
    )
}

/// Tape handles for the position-loss terms of one frame.
pub struct PositionLossVars {
    pub marker_occluded: Var,
    pub marker_shifted: Var,
    pub joint: Var,
    pub total: Var,
}

/// Per-row mean weights over the selected subset; all-zero when empty, which
/// makes the corresponding term exactly 0.
fn subset_mean_weights(flags: &[bool], select_occluded: bool) -> Vec<f64> {
    let count = flags.iter().filter(|f| **f == select_occluded).count();
    flags
        .iter()
        .map(|f| {
            if *f == select_occluded && count > 0 {
                1.0 / count as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Builds the position loss on the tape. `gt_markers`/`gt_joints` enter as
/// constants; gradients flow only into the predictions.
pub fn position_loss_on(
    g: &mut Graph,
    pred_markers: Var,
    pred_joints: Var,
    gt_markers: &Array2<f64>,
    gt_joints: &Array2<f64>,
    occluded: &[bool],
    weights: LossWeights,
) -> Result<PositionLossVars, SolverError> {
    if g.value(pred_markers).dim() != gt_markers.dim()
        || g.value(pred_joints).dim() != gt_joints.dim()
        || occluded.len() != gt_markers.nrows()
    {
        return Err(SolverError::ShapeMismatch {
            expected: format!(
                "{}×3 markers, {}×3 joints, {} occlusion flags",
                gt_markers.nrows(),
                gt_joints.nrows(),
                gt_markers.nrows()
            ),
            got: format!(
                "{}×{} markers, {}×{} joints, {} flags",
                g.value(pred_markers).nrows(),
                g.value(pred_markers).ncols(),
                g.value(pred_joints).nrows(),
                g.value(pred_joints).ncols(),
                occluded.len()
            ),
        });
    }
    let gt_m = g.leaf(gt_markers.clone());
    let gt_j = g.leaf(gt_joints.clone());
    let diff_m = g.sub(pred_markers, gt_m);
    let diff_j = g.sub(pred_joints, gt_j);
    let marker_occluded = g.weighted_row_norm_sum(diff_m, subset_mean_weights(occluded, true));
    let marker_shifted = g.weighted_row_norm_sum(diff_m, subset_mean_weights(occluded, false));
    let joints = gt_joints.nrows();
    let joint = g.weighted_row_norm_sum(diff_j, vec![1.0 / joints as f64; joints]);
    let t1 = g.scale(marker_occluded, weights.lambda1);
    let t2 = g.scale(marker_shifted, weights.lambda2);
    let t3 = g.scale(joint, weights.lambda3);
    let t12 = g.add(t1, t2);
    let total = g.add(t12, t3);
    Ok(PositionLossVars {
        marker_occluded,
        marker_shifted,
        joint,
        total,
    })
}

/// Rotation loss: mean over joints of the squared error between the
/// predicted rotation's 6-D encoding and the ground truth's. Every joint
/// weighs equally. Returns (mean, per-joint squared errors).
pub fn rotation_loss(pred: &[Rotation], gt: &[Rotation]) -> (f64, Vec<f64>) {
    assert_eq!(pred.len(), gt.len(), "joint count mismatch");
    let per_joint: Vec<f64> = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            let a = p.to_6d();
            let b = g.to_6d();
            a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum()
        })
        .collect();
    let mean = if per_joint.is_empty() {
        0.0
    } else {
        per_joint.iter().sum::<f64>() / per_joint.len() as f64
    };
    (mean, per_joint)
}

/// 6-D encodings of a rotation list as a J×6 array.
pub fn rotations_to_6d(rotations: &[Rotation]) -> Array2<f64> {
    let mut out = Array2::zeros((rotations.len(), 6));
    for (i, r) in rotations.iter().enumerate() {
        let six = r.to_6d();
        for (c, v) in six.iter().enumerate() {
            out[(i, c)] = *v;
        }
    }
    out
}

/// Builds the rotation loss on the tape against ground-truth rotations:
/// the raw J×6 head output is compared to the targets' 6-D encodings
/// before any decode, so gradients stay simple and exact.
pub fn rotation_loss_on(
    g: &mut Graph,
    head: Var,
    gt: &[Rotation],
) -> Result<Var, SolverError> {
    let joints = gt.len();
    if g.value(head).dim() != (joints, 6) {
        return Err(SolverError::ShapeMismatch {
            expected: format!("{joints}×6 rotation head output"),
            got: format!("{}×{}", g.value(head).nrows(), g.value(head).ncols()),
        });
    }
    let targets = g.leaf(rotations_to_6d(gt));
    let diff = g.sub(head, targets);
    Ok(g.weighted_row_sqnorm_sum(diff, vec![1.0 / joints as f64; joints]))
}
