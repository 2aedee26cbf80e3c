//! Neural solvers that reconstruct joint positions and rotations from
//! partially occluded marker clouds.
//!
//! The crate provides a small reverse-mode autodiff tape ([`graph`]), a
//! transformer-style position solver with an inspectable marker-to-joint
//! attention chain ([`position`], [`chain`]), a decoupled rotation solver
//! over a 6-D rotation parameterization ([`rotation`]), the training loop
//! with Adam and deterministic execution ([`train`]), and finite-difference
//! gradient verification ([`gradcheck`]).

pub mod blocks;
pub mod chain;
pub mod gradcheck;
pub mod graph;
pub mod losses;
pub mod params;
pub mod position;
pub mod rotation;
pub mod train;

pub use blocks::{
    affine, attention, attention_block, attention_weights_averaged, conv_block, feed_forward,
    layer_norm_block, AffineParams, AttentionOutput, AttentionParams, BlockParams,
    ConvBlockParams, LayerNormParams,
};
pub use chain::{
    chain_report, compose_propagation, ChainPropagation, ChainReportEntry, TokenKind,
    COMPOSED_ROW_SUM_TOL, ROW_SUM_TOL,
};
pub use gradcheck::{gradcheck_all_params, gradcheck_sampled, GradCheckReport, GRADCHECK_STEP};
pub use graph::{Gradients, Graph, Var, LAYER_NORM_EPS};
pub use losses::{
    position_loss, position_loss_on, position_loss_terms, rotation_loss, rotation_loss_on,
    rotations_to_6d, LossWeights, PositionLossTerms, PositionLossVars,
};
pub use params::{ParamId, Parameters};
pub use position::{
    frame_coords, PositionForward, PositionModelConfig, PositionOutput, PositionSolver,
    CENTRAL_TOL, MASK_NEG,
};
pub use rotation::{decode_6d_rows, stack_coords, RotationSolver, RotationSolverConfig};
pub use train::{
    train_merged, train_position, train_rotation, Adam, AdamConfig, LossCurveRow, TrainConfig,
    TrainReport, TrainingFrame,
};

use occluforge_core::geometry::GeometryError;
use occluforge_core::kinematics::KinematicsError;
use thiserror::Error;

/// Errors produced by model construction, inference, and training.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A model input violated a precondition the caller must uphold.
    #[error("input contract violated: {0}")]
    ContractViolation(&'static str),
    /// The 6-D output for a joint could not be orthonormalized.
    #[error("degenerate 6-D rotation output at joint {joint}")]
    Degenerate6D { joint: usize },
    /// Mismatched tensor dimensions between caller data and model config.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    /// An attention propagation row did not sum to one.
    #[error("propagation layer {layer} row {row} sums to {sum}, not 1")]
    NotRowStochastic { layer: usize, row: usize, sum: f64 },
    /// Training produced a non-finite loss.
    #[error("training diverged at step {step} with loss {loss}")]
    Diverged { step: usize, loss: f64 },
    /// A parameter name was registered twice.
    #[error("duplicate parameter name: {0}")]
    DuplicateParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}
