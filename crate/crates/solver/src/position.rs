//! Position solver: completes occluded markers, corrects shifted ones, and
//! predicts joint positions from a single centralized marker frame.
//!
//! Visible markers enter through a learned coordinate embedding; occluded
//! slots are replaced by one shared "occluded" embedding, and every marker
//! carries its own positional embedding so identity survives occlusion.
//! Convolution and self-attention blocks encode the marker set, then a
//! decoder attends over the joint token set (markers ∪ joint queries),
//! which is where markers and joints exchange information. The decoder's
//! attention matrices are captured per layer as a [`ChainPropagation`].

use crate::blocks::{
    affine, attention_block, attention_weights_averaged, conv_block, AffineParams, BlockParams,
    ConvBlockParams,
};
use crate::chain::ChainPropagation;
use crate::graph::{Graph, Var};
use crate::params::{ParamId, Parameters};
use crate::SolverError;
use ndarray::Array2;
use occluforge_core::{MarkerFrame, Rotation, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A visible-marker centroid farther than this from the origin means the
/// caller skipped centralization.
pub const CENTRAL_TOL: f64 = 1e-9;
/// Additive score mask value that suppresses a column after softmax.
pub const MASK_NEG: f64 = -1e30;

/// Meters → network units on the way in. Desk-scale coordinates are a few
/// tenths of a meter; Xavier-scale weights on such small inputs leave
/// first-layer activations (and attention scores) too quiet to train
/// briskly, so inputs are expressed in decimeter-like units internally.
/// Outputs are unaffected: heads regress meters directly.
pub const COORD_SCALE: f64 = 10.0;

/// Architecture and ablation switches for [`PositionSolver`].
#[derive(Debug, Clone)]
pub struct PositionModelConfig {
    pub markers: usize,
    pub joints: usize,
    /// Token feature width; must divide by `heads`.
    pub width: usize,
    /// Residual convolution blocks over the marker axis (kernel 3).
    pub conv_blocks: usize,
    /// Self-attention blocks over marker tokens.
    pub encoder_blocks: usize,
    /// Attention blocks over the joint marker∪joint token set.
    pub decoder_blocks: usize,
    pub heads: usize,
    /// Pure-mixing decoder: each layer applies exactly its captured
    /// propagation matrix, so final states equal the composed product of
    /// initial states. Diagnostic mode only.
    pub linear_decoder: bool,
    /// Ablation: markers and joints may not attend to joint tokens, cutting
    /// the marker→joint→marker relay path.
    pub no_chain: bool,
    /// Merged-model mode: adds a 6-D rotation head on the joint tokens.
    pub rotation_head: bool,
}

impl PositionModelConfig {
    /// Desk-scale defaults: width 64, 2 conv, 2 encoder, 3 decoder blocks,
    /// 4 heads, no ablations.
    pub fn new(markers: usize, joints: usize) -> Self {
        PositionModelConfig {
            markers,
            joints,
            width: 64,
            conv_blocks: 2,
            encoder_blocks: 2,
            decoder_blocks: 3,
            heads: 4,
            linear_decoder: false,
            no_chain: false,
            rotation_head: false,
        }
    }

    pub fn token_count(&self) -> usize {
        self.markers + self.joints
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
        if self.decoder_blocks == 0 {
            return Err(SolverError::ContractViolation(
                "at least one decoder block is required",
            ));
        }
        Ok(())
    }
}

/// All parameter handles of the position solver, in registration order.
#[derive(Debug, Clone)]
struct PositionIds {
    input: AffineParams,
    occluded_embedding: ParamId,
    marker_positional: ParamId,
    joint_shared: ParamId,
    joint_positional: ParamId,
    conv: Vec<ConvBlockParams>,
    encoder: Vec<BlockParams>,
    decoder: Vec<BlockParams>,
    marker_completion: AffineParams,
    marker_correction: AffineParams,
    joint_head: AffineParams,
    rotation_head: Option<AffineParams>,
}

/// Tape handles produced by one forward pass; feed these to loss builders.
#[derive(Debug)]
pub struct PositionForward {
    /// Completed/corrected marker positions, M×3.
    pub markers: Var,
    /// Predicted joint positions, J×3.
    pub joints: Var,
    /// J×6 rotation output, present only with `rotation_head`.
    pub rotations6d: Option<Var>,
    /// Per-decoder-layer attention capture.
    pub chain: ChainPropagation,
    /// Token states entering the decoder (V×width), read off the tape.
    pub initial_tokens: Array2<f64>,
    /// Token states leaving the decoder, before the output heads.
    pub final_tokens: Array2<f64>,
}

/// Plain-array forward result for evaluation pipelines.
#[derive(Debug)]
pub struct PositionOutput {
    pub markers: Vec<Vec3>,
    pub joints: Vec<Vec3>,
    /// Decoded joint rotations, present only with `rotation_head`.
    pub rotations: Option<Vec<Rotation>>,
    pub chain: ChainPropagation,
    pub initial_tokens: Array2<f64>,
    pub final_tokens: Array2<f64>,
}

/// The trainable position model: configuration plus parameter store.
pub struct PositionSolver {
    config: PositionModelConfig,
    params: Parameters,
    ids: PositionIds,
}

impl PositionSolver {
    /// Builds a model with seeded Xavier initialization.
    pub fn new(config: PositionModelConfig, seed: u64) -> Result<Self, SolverError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Parameters::new();
        let d = config.width;

        let input = AffineParams::init(&mut params, "input", 3, d, &mut rng)?;
        let occluded_embedding = params.add_xavier("occluded_embedding", 1, d, &mut rng)?;
        let marker_positional =
            params.add_xavier("marker_positional", config.markers, d, &mut rng)?;
        let joint_shared = params.add_xavier("joint_shared", 1, d, &mut rng)?;
        let joint_positional = params.add_xavier("joint_positional", config.joints, d, &mut rng)?;

        let mut conv = Vec::new();
        for i in 0..config.conv_blocks {
            conv.push(ConvBlockParams::init(&mut params, &format!("conv{i}"), d, &mut rng)?);
        }
        let mut encoder = Vec::new();
        for i in 0..config.encoder_blocks {
            encoder.push(BlockParams::init(
                &mut params,
                &format!("enc{i}"),
                d,
                config.heads,
                &mut rng,
            )?);
        }
        let mut decoder = Vec::new();
        for i in 0..config.decoder_blocks {
            decoder.push(BlockParams::init(
                &mut params,
                &format!("dec{i}"),
                d,
                config.heads,
                &mut rng,
            )?);
        }
        // Occluded markers need an absolute prediction; visible markers only
        // a correction on top of their observed coordinates. Separate heads
        // keep those two regressions from fighting over one weight matrix,
        // and the correction starts at exactly zero (identity completion).
        let marker_completion =
            AffineParams::init(&mut params, "marker_completion", d, 3, &mut rng)?;
        let marker_correction = AffineParams::init_zero(&mut params, "marker_correction", d, 3)?;
        // Zero-init: joint estimates start at the visible centroid (origin).
        let joint_head = AffineParams::init_zero(&mut params, "joint_head", d, 3)?;
        let rotation_head = if config.rotation_head {
            Some(AffineParams::init(&mut params, "rotation_head", d, 6, &mut rng)?)
        } else {
            None
        };

        Ok(PositionSolver {
            config,
            params,
            ids: PositionIds {
                input,
                occluded_embedding,
                marker_positional,
                joint_shared,
                joint_positional,
                conv,
                encoder,
                decoder,
                marker_completion,
                marker_correction,
                joint_head,
                rotation_head,
            },
        })
    }

    pub fn config(&self) -> &PositionModelConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    /// Score mask for the ablated decoder: every token is forbidden from
    /// attending to joint tokens.
    fn no_chain_mask(&self) -> Array2<f64> {
        let v = self.config.token_count();
        let mut mask = Array2::zeros((v, v));
        for r in 0..v {
            for c in self.config.markers..v {
                mask[(r, c)] = MASK_NEG;
            }
        }
        mask
    }

    fn check_frame(&self, coords: &Array2<f64>, visibility: &[bool]) -> Result<(), SolverError> {
        let m = self.config.markers;
        if coords.dim() != (m, 3) || visibility.len() != m {
            return Err(SolverError::ShapeMismatch {
                expected: format!("{m}×3 coordinates with {m} visibility flags"),
                got: format!(
                    "{}×{} coordinates with {} flags",
                    coords.nrows(),
                    coords.ncols(),
                    visibility.len()
                ),
            });
        }
        let visible = visibility.iter().filter(|v| **v).count();
        if visible == 0 {
            return Err(SolverError::ContractViolation(
                "frame has no visible markers",
            ));
        }
        let mut centroid = [0.0; 3];
        for (row, vis) in coords.rows().into_iter().zip(visibility) {
            if *vis {
                for (c, acc) in centroid.iter_mut().enumerate() {
                    *acc += row[c];
                }
            }
        }
        let norm = centroid.iter().map(|c| (c / visible as f64).powi(2)).sum::<f64>().sqrt();
        if norm > CENTRAL_TOL {
            return Err(SolverError::ContractViolation(
                "input frame is not centralized (visible centroid is off origin)",
            ));
        }
        Ok(())
    }

    /// Builds the forward computation on an existing tape using the model's
    /// own parameters. `coords` rows are centralized marker positions with
    /// occluded slots ignored (they are masked out before entering the
    /// network).
    pub fn forward_on(
        &self,
        g: &mut Graph,
        coords: &Array2<f64>,
        visibility: &[bool],
    ) -> Result<PositionForward, SolverError> {
        self.forward_with(g, &self.params, coords, visibility)
    }

    /// As [`forward_on`](Self::forward_on) but reading parameter values from
    /// an injected store with the same layout (gradient checking perturbs a
    /// clone of the model's parameters).
    pub fn forward_with(
        &self,
        g: &mut Graph,
        params: &Parameters,
        coords: &Array2<f64>,
        visibility: &[bool],
    ) -> Result<PositionForward, SolverError> {
        self.check_frame(coords, visibility)?;
        let m = self.config.markers;
        let j = self.config.joints;

        // Marker tokens: masked coordinate embedding + occlusion fill + identity.
        let coords_leaf = g.leaf(coords.clone());
        let coords_scaled = g.scale(coords_leaf, COORD_SCALE);
        let embedded = affine(g, params, coords_scaled, self.ids.input);
        let d_vis = g.leaf(diag(visibility, false));
        let visible_part = g.matmul(d_vis, embedded);
        let ones = g.leaf(Array2::ones((m, 1)));
        let occluded_row = g.param(params, self.ids.occluded_embedding);
        let occluded_base = g.matmul(ones, occluded_row);
        let d_occ = g.leaf(diag(visibility, true));
        let occluded_part = g.matmul(d_occ, occluded_base);
        let positional = g.param(params, self.ids.marker_positional);
        let mixed = g.add(visible_part, occluded_part);
        let mut x = g.add(mixed, positional);

        for block in &self.ids.conv {
            x = conv_block(g, params, x, block);
        }
        for block in &self.ids.encoder {
            let (next, _) = attention_block(g, params, x, block, None);
            x = next;
        }

        // Joint queries: shared embedding + per-joint identity.
        let joint_ones = g.leaf(Array2::ones((j, 1)));
        let joint_shared = g.param(params, self.ids.joint_shared);
        let joint_base = g.matmul(joint_ones, joint_shared);
        let joint_positional = g.param(params, self.ids.joint_positional);
        let queries = g.add(joint_base, joint_positional);

        let mut tokens = g.concat_rows(x, queries);
        let initial_tokens = g.value(tokens).clone();
        let mask = self.config.no_chain.then(|| self.no_chain_mask());

        let mut captured = Vec::with_capacity(self.ids.decoder.len());
        for block in &self.ids.decoder {
            if self.config.linear_decoder {
                let weights =
                    attention_weights_averaged(g, params, tokens, &block.attn, mask.as_ref());
                captured.push(g.value(weights).clone());
                tokens = g.matmul(weights, tokens);
            } else {
                let (next, propagation) =
                    attention_block(g, params, tokens, block, mask.as_ref());
                captured.push(propagation);
                tokens = next;
            }
        }
        let final_tokens = g.value(tokens).clone();
        let chain = ChainPropagation::new(captured, m, j)?;

        // Heads read the raw residual stream: normalizing here would erase
        // per-token scale, which absolute coordinate regression needs.
        let marker_tokens = g.slice_rows(tokens, 0, m);
        // Visible markers: observed coordinates plus a learned correction.
        // Occluded markers: absolute completion from context.
        let correction = affine(g, params, marker_tokens, self.ids.marker_correction);
        let anchored = g.add(coords_leaf, correction);
        let visible_rows = g.matmul(d_vis, anchored);
        let completion = affine(g, params, marker_tokens, self.ids.marker_completion);
        let occluded_rows = g.matmul(d_occ, completion);
        let markers = g.add(visible_rows, occluded_rows);
        let joint_tokens = g.slice_rows(tokens, m, j);
        let joints = affine(g, params, joint_tokens, self.ids.joint_head);
        let rotations6d = self
            .ids
            .rotation_head
            .map(|head| affine(g, params, joint_tokens, head));

        Ok(PositionForward {
            markers,
            joints,
            rotations6d,
            chain,
            initial_tokens,
            final_tokens,
        })
    }

    /// One-shot inference on a centralized frame; returns plain arrays.
    pub fn forward(&self, frame: &MarkerFrame) -> Result<PositionOutput, SolverError> {
        if frame.positions.len() != self.config.markers {
            return Err(SolverError::ShapeMismatch {
                expected: format!("{} markers", self.config.markers),
                got: format!("{} markers", frame.positions.len()),
            });
        }
        let coords = frame_coords(frame);
        let mut g = Graph::new();
        let fwd = self.forward_on(&mut g, &coords, &frame.visibility)?;
        let markers = rows_to_vec3(g.value(fwd.markers));
        let joints = rows_to_vec3(g.value(fwd.joints));
        let rotations = match fwd.rotations6d {
            None => None,
            Some(var) => {
                let raw = g.value(var);
                let mut decoded = Vec::with_capacity(raw.nrows());
                for (joint, row) in raw.rows().into_iter().enumerate() {
                    let six: [f64; 6] = [row[0], row[1], row[2], row[3], row[4], row[5]];
                    let rotation = Rotation::from_6d(&six)
                        .map_err(|_| SolverError::Degenerate6D { joint })?;
                    decoded.push(rotation);
                }
                Some(decoded)
            }
        };
        Ok(PositionOutput {
            markers,
            joints,
            rotations,
            chain: fwd.chain,
            initial_tokens: fwd.initial_tokens,
            final_tokens: fwd.final_tokens,
        })
    }
}

/// M×M diagonal selector; `invert` selects the occluded slots instead.
fn diag(visibility: &[bool], invert: bool) -> Array2<f64> {
    let m = visibility.len();
    let mut d = Array2::zeros((m, m));
    for (i, &vis) in visibility.iter().enumerate() {
        if vis != invert {
            d[(i, i)] = 1.0;
        }
    }
    d
}

/// Marker frame → M×3 array (occluded slots pass through as stored, which
/// the visibility mask then zeroes inside the network).
pub fn frame_coords(frame: &MarkerFrame) -> Array2<f64> {
    let mut coords = Array2::zeros((frame.positions.len(), 3));
    for (i, p) in frame.positions.iter().enumerate() {
        coords[(i, 0)] = p.x;
        coords[(i, 1)] = p.y;
        coords[(i, 2)] = p.z;
    }
    coords
}

fn rows_to_vec3(a: &Array2<f64>) -> Vec<Vec3> {
    a.rows()
        .into_iter()
        .map(|r| Vec3::new(r[0], r[1], r[2]))
        .collect()
}
