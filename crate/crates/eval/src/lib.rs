//! Accuracy evaluation for occlusion-robust pose solving.
//!
//! * [`metrics`] — joint position error (cm) and joint orientation error
//!   (degrees), per frame and batched.
//! * [`pipeline`] — the [`FrameSolver`] trait plus the decoupled, merged,
//!   and oracle configurations it is implemented for.
//! * [`report`] — severity-bucketed dataset evaluation with CSV and table
//!   rendering.

pub mod metrics;
pub mod pipeline;
pub mod report;

pub use metrics::{joe, joe_frame, jpe, jpe_frame};
pub use pipeline::{
    DecoupledPipeline, FrameSolution, FrameSolver, MergedPipeline, OracleStub, SolveFailure,
};
pub use report::{evaluate, BucketMetrics, EvalReport, EvalSequence};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{what}: prediction has {pred} entries, ground truth {gt}")]
    ShapeMismatch {
        what: &'static str,
        pred: usize,
        gt: usize,
    },
    #[error("no frames to evaluate")]
    EmptyDataset,
    #[error("report failed its self-check: {0}")]
    Inconsistent(&'static str),
}
