//! Rotation solver: predicts per-joint rotations from T-pose-aligned marker
//! and joint positions, independently per frame.
//!
//! Positions arrive already aligned (the position solver runs first, then
//! rigid alignment), so this network never sees occlusion directly — every
//! input slot holds a real coordinate. Stacked self-attention blocks mix
//! the joint token set and a 6-D head on the joint tokens is decoded into
//! orthonormal rotation matrices, which makes every output a valid rotation
//! regardless of parameter values.

use crate::blocks::{affine, attention_block, layer_norm_block, AffineParams, BlockParams, LayerNormParams};
use crate::graph::{Graph, Var};
use crate::params::{ParamId, Parameters};
use crate::SolverError;
use ndarray::Array2;
use occluforge_core::{Rotation, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Architecture of the rotation solver.
#[derive(Debug, Clone)]
pub struct RotationSolverConfig {
    pub markers: usize,
    pub joints: usize,
    pub width: usize,
    /// Stacked self-attention blocks.
    pub blocks: usize,
    pub heads: usize,
}

impl RotationSolverConfig {
    /// Desk-scale defaults: width 64, 4 blocks, 4 heads.
    pub fn new(markers: usize, joints: usize) -> Self {
        RotationSolverConfig {
            markers,
            joints,
            width: 64,
            blocks: 4,
            heads: 4,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.markers == 0 || self.joints == 0 {
            return Err(SolverError::ContractViolation(
                "model needs at least one marker and one joint",
            ));
        }
        if self.width == 0 || self.heads == 0 || self.width % self.heads != 0 {
            return Err(SolverError::ContractViolation(
                "feature width must be a positive multiple of the head count",
            ));
        }
        if self.blocks == 0 {
            return Err(SolverError::ContractViolation(
                "at least one attention block is required",
            ));
        }
        Ok(())
    }
}

struct RotationIds {
    input: AffineParams,
    positional: ParamId,
    blocks: Vec<BlockParams>,
    final_norm: LayerNormParams,
    head: AffineParams,
}

/// The trainable rotation model.
pub struct RotationSolver {
    config: RotationSolverConfig,
    params: Parameters,
    ids: RotationIds,
}

impl RotationSolver {
    pub fn new(config: RotationSolverConfig, seed: u64) -> Result<Self, SolverError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Parameters::new();
        let d = config.width;
        let tokens = config.markers + config.joints;

        let input = AffineParams::init(&mut params, "input", 3, d, &mut rng)?;
        let positional = params.add_xavier("positional", tokens, d, &mut rng)?;
        let mut blocks = Vec::new();
        for i in 0..config.blocks {
            blocks.push(BlockParams::init(
                &mut params,
                &format!("blk{i}"),
                d,
                config.heads,
                &mut rng,
            )?);
        }
        let final_norm = LayerNormParams::init(&mut params, "final_norm", d)?;
        let head = AffineParams::init(&mut params, "head", d, 6, &mut rng)?;

        Ok(RotationSolver {
            config,
            params,
            ids: RotationIds {
                input,
                positional,
                blocks,
                final_norm,
                head,
            },
        })
    }

    pub fn config(&self) -> &RotationSolverConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    /// Builds the forward pass on an existing tape. `coords` stacks aligned
    /// marker rows then aligned joint rows, (M+J)×3. Returns the J×6 head
    /// output.
    pub fn forward_on(&self, g: &mut Graph, coords: &Array2<f64>) -> Result<Var, SolverError> {
        self.forward_with(g, &self.params, coords)
    }

    /// As [`forward_on`](Self::forward_on) but reading parameter values from
    /// an injected store with the same layout.
    pub fn forward_with(
        &self,
        g: &mut Graph,
        params: &Parameters,
        coords: &Array2<f64>,
    ) -> Result<Var, SolverError> {
        let tokens = self.config.markers + self.config.joints;
        if coords.dim() != (tokens, 3) {
            return Err(SolverError::ShapeMismatch {
                expected: format!("{tokens}×3 stacked marker+joint coordinates"),
                got: format!("{}×{}", coords.nrows(), coords.ncols()),
            });
        }
        let coords_leaf = g.leaf(coords.clone());
        let embedded = affine(g, params, coords_leaf, self.ids.input);
        let positional = g.param(params, self.ids.positional);
        let mut x = g.add(embedded, positional);
        for block in &self.ids.blocks {
            let (next, _) = attention_block(g, params, x, block, None);
            x = next;
        }
        let normed = layer_norm_block(g, params, x, self.ids.final_norm);
        let joint_tokens = g.slice_rows(normed, self.config.markers, self.config.joints);
        Ok(affine(g, params, joint_tokens, self.ids.head))
    }

    /// One-shot inference: aligned markers and joints in, decoded rotations
    /// out. The decode guarantees orthonormal, det +1 outputs; a joint whose
    /// 6-D head output cannot be orthonormalized reports its index.
    pub fn forward(&self, markers: &[Vec3], joints: &[Vec3]) -> Result<Vec<Rotation>, SolverError> {
        if markers.len() != self.config.markers || joints.len() != self.config.joints {
            return Err(SolverError::ShapeMismatch {
                expected: format!(
                    "{} markers and {} joints",
                    self.config.markers, self.config.joints
                ),
                got: format!("{} markers and {} joints", markers.len(), joints.len()),
            });
        }
        let coords = stack_coords(markers, joints);
        let mut g = Graph::new();
        let head = self.forward_on(&mut g, &coords)?;
        decode_6d_rows(g.value(head))
    }
}

/// Stacks marker rows then joint rows into an (M+J)×3 array.
pub fn stack_coords(markers: &[Vec3], joints: &[Vec3]) -> Array2<f64> {
    let mut coords = Array2::zeros((markers.len() + joints.len(), 3));
    for (i, p) in markers.iter().chain(joints.iter()).enumerate() {
        coords[(i, 0)] = p.x;
        coords[(i, 1)] = p.y;
        coords[(i, 2)] = p.z;
    }
    coords
}

/// Decodes each J×6 row through Gram–Schmidt orthonormalization.
pub fn decode_6d_rows(raw: &Array2<f64>) -> Result<Vec<Rotation>, SolverError> {
    let mut rotations = Vec::with_capacity(raw.nrows());
    for (joint, row) in raw.rows().into_iter().enumerate() {
        let six: [f64; 6] = [row[0], row[1], row[2], row[3], row[4], row[5]];
        rotations.push(Rotation::from_6d(&six).map_err(|_| SolverError::Degenerate6D { joint })?);
    }
    Ok(rotations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_solver() -> RotationSolver {
        let config = RotationSolverConfig {
            width: 8,
            blocks: 2,
            heads: 2,
            ..RotationSolverConfig::new(4, 2)
        };
        RotationSolver::new(config, 9).unwrap()
    }

    fn sample_inputs() -> (Vec<Vec3>, Vec<Vec3>) {
        let markers = vec![
            Vec3::new(0.1, 0.8, 0.0),
            Vec3::new(-0.1, 0.8, 0.0),
            Vec3::new(0.1, 0.2, 0.05),
            Vec3::new(-0.1, 0.2, -0.05),
        ];
        let joints = vec![Vec3::new(0.0, 0.25, 0.0), Vec3::new(0.0, 0.75, 0.0)];
        (markers, joints)
    }

    #[test]
    fn outputs_are_valid_rotations() {
        let solver = small_solver();
        let (markers, joints) = sample_inputs();
        let rotations = solver.forward(&markers, &joints).unwrap();
        assert_eq!(rotations.len(), 2);
        for r in &rotations {
            let m = r.matrix();
            assert!((m.determinant() - 1.0).abs() < 1e-9);
            assert!((m.transpose() * m - occluforge_core::Mat3::identity()).norm() < 1e-9);
        }
    }

    #[test]
    fn forward_is_pure() {
        let solver = small_solver();
        let (markers, joints) = sample_inputs();
        let a = solver.forward(&markers, &joints).unwrap();
        let b = solver.forward(&markers, &joints).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.matrix(), rb.matrix());
        }
    }

    #[test]
    fn wrong_input_counts_are_rejected() {
        let solver = small_solver();
        let (markers, joints) = sample_inputs();
        let err = solver.forward(&markers[..3], &joints).unwrap_err();
        assert!(matches!(err, SolverError::ShapeMismatch { .. }));
    }
}
