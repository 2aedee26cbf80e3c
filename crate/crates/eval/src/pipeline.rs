//! Frame-level solving pipelines that evaluation runs against ground truth.
//!
//! Three real configurations share the [`FrameSolver`] trait:
//!
//! * [`DecoupledPipeline`] — position solving, rigid alignment, then rotation
//!   solving (the full two-stage arrangement; also used for the reduced
//!   marker–joint-attention model, which differs only in its configuration).
//! * [`MergedPipeline`] — one network with a rotation head and alignment as
//!   input preprocessing; frames whose alignment is underdetermined fail.
//! * [`OracleStub`] — echoes ground truth; calibrates the harness at zero.

use occluforge_core::{
    align_to_tpose, centralize, MarkerFrame, MarkerLayout, Rotation, Vec3,
};
use occluforge_solver::{PositionSolver, RotationSolver, SolverError, TrainingFrame};

/// World-space joint positions plus per-joint rotations (root entry carries
/// the world orientation, the rest are local to their parent).
#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub joints: Vec<Vec3>,
    pub rotations: Vec<Rotation>,
}

/// Why a frame could not be solved. Failures are counted and excluded from
/// metric averages, never propagated as hard errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveFailure {
    /// Too few visible alignment markers for the rigid pre-alignment.
    AlignmentUnderdetermined,
    /// Any other per-frame defect (empty frame, degenerate decode, ...).
    Other(String),
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveFailure::AlignmentUnderdetermined => {
                write!(f, "alignment underdetermined (< 3 visible key markers)")
            }
            SolveFailure::Other(msg) => write!(f, "{msg}"),
        }
    }
}

/// A solving configuration evaluated frame by frame. The full training frame
/// is passed so the oracle stub can echo ground truth; real pipelines must
/// read only `frame.input`.
pub trait FrameSolver: Sync {
    fn name(&self) -> &str;
    /// Short structural description recorded in reports.
    fn fingerprint(&self) -> String;
    fn solve(&self, frame: &TrainingFrame) -> Result<FrameSolution, SolveFailure>;
}

fn solver_failure(e: SolverError) -> SolveFailure {
    SolveFailure::Other(e.to_string())
}

/// Stage one + rigid alignment + stage two.
pub struct DecoupledPipeline {
    pub position: PositionSolver,
    pub rotation: RotationSolver,
    pub layout: MarkerLayout,
    /// Rest-pose marker cloud the alignment maps onto.
    pub reference: Vec<Vec3>,
    pub name: String,
}

impl DecoupledPipeline {
    pub fn new(
        position: PositionSolver,
        rotation: RotationSolver,
        layout: MarkerLayout,
        reference: Vec<Vec3>,
        name: impl Into<String>,
    ) -> Self {
        DecoupledPipeline {
            position,
            rotation,
            layout,
            reference,
            name: name.into(),
        }
    }
}

impl FrameSolver for DecoupledPipeline {
    fn name(&self) -> &str {
        &self.name
    }

    fn fingerprint(&self) -> String {
        let p = self.position.config();
        let r = self.rotation.config();
        format!(
            "decoupled pos[w{} c{} e{} d{} h{}{}] rot[w{} b{} h{}] M{} J{}",
            p.width,
            p.conv_blocks,
            p.encoder_blocks,
            p.decoder_blocks,
            p.heads,
            if p.no_chain { " no-chain" } else { "" },
            r.width,
            r.blocks,
            r.heads,
            p.markers,
            p.joints
        )
    }

    fn solve(&self, frame: &TrainingFrame) -> Result<FrameSolution, SolveFailure> {
        let (centered, centroid) =
            centralize(&frame.input).map_err(|e| SolveFailure::Other(e.to_string()))?;
        let out = self.position.forward(&centered).map_err(solver_failure)?;
        let world_markers: Vec<Vec3> = out.markers.iter().map(|p| p + centroid).collect();
        let world_joints: Vec<Vec3> = out.joints.iter().map(|p| p + centroid).collect();

        let completed = MarkerFrame::fully_visible(world_markers);
        let (aligned, transform) = align_to_tpose(&completed, &self.layout, &self.reference)
            .map_err(|e| {
                if e.is_underdetermined() {
                    SolveFailure::AlignmentUnderdetermined
                } else {
                    SolveFailure::Other(e.to_string())
                }
            })?;
        let aligned_joints: Vec<Vec3> =
            world_joints.iter().map(|p| transform.apply(p)).collect();

        let mut rotations = self
            .rotation
            .forward(&aligned.positions, &aligned_joints)
            .map_err(solver_failure)?;
        // The rotation stage works in the aligned frame; undo the alignment
        // on the root to express its orientation in world coordinates.
        rotations[0] = transform.rotation.inverse() * rotations[0];

        Ok(FrameSolution {
            joints: world_joints,
            rotations,
        })
    }
}

/// One network for positions and rotations, with alignment done up front
/// from visible key markers alone.
pub struct MergedPipeline {
    pub solver: PositionSolver,
    pub layout: MarkerLayout,
    pub reference: Vec<Vec3>,
    pub name: String,
}

impl MergedPipeline {
    pub fn new(
        solver: PositionSolver,
        layout: MarkerLayout,
        reference: Vec<Vec3>,
        name: impl Into<String>,
    ) -> Result<Self, SolverError> {
        if !solver.config().rotation_head {
            return Err(SolverError::ContractViolation(
                "merged pipeline requires a model with a rotation head",
            ));
        }
        Ok(MergedPipeline {
            solver,
            layout,
            reference,
            name: name.into(),
        })
    }
}

impl FrameSolver for MergedPipeline {
    fn name(&self) -> &str {
        &self.name
    }

    fn fingerprint(&self) -> String {
        let p = self.solver.config();
        format!(
            "merged[w{} c{} e{} d{} h{}] M{} J{}",
            p.width, p.conv_blocks, p.encoder_blocks, p.decoder_blocks, p.heads, p.markers, p.joints
        )
    }

    fn solve(&self, frame: &TrainingFrame) -> Result<FrameSolution, SolveFailure> {
        let (aligned, transform) = align_to_tpose(&frame.input, &self.layout, &self.reference)
            .map_err(|e| {
                if e.is_underdetermined() {
                    SolveFailure::AlignmentUnderdetermined
                } else {
                    SolveFailure::Other(e.to_string())
                }
            })?;
        let (centered, centroid) =
            centralize(&aligned).map_err(|e| SolveFailure::Other(e.to_string()))?;
        let out = self.solver.forward(&centered).map_err(solver_failure)?;

        let inverse = transform.inverse();
        let world_joints: Vec<Vec3> = out
            .joints
            .iter()
            .map(|p| inverse.apply(&(p + centroid)))
            .collect();
        let mut rotations = out
            .rotations
            .ok_or_else(|| SolveFailure::Other("model produced no rotations".into()))?;
        rotations[0] = transform.rotation.inverse() * rotations[0];

        Ok(FrameSolution {
            joints: world_joints,
            rotations,
        })
    }
}

/// Echoes ground truth; every metric must come out exactly zero.
pub struct OracleStub;

impl FrameSolver for OracleStub {
    fn name(&self) -> &str {
        "oracle"
    }

    fn fingerprint(&self) -> String {
        "oracle (ground-truth echo)".into()
    }

    fn solve(&self, frame: &TrainingFrame) -> Result<FrameSolution, SolveFailure> {
        Ok(FrameSolution {
            joints: frame.gt_joints.clone(),
            rotations: frame.gt_rotations.clone(),
        })
    }
}
