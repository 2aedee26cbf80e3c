//! Transformer building blocks on the tape: layer norm with learnable
//! affine, multi-head self-attention with optional additive masking and
//! propagation capture, position-wise feed-forward, and a temporal
//! convolution block over the token axis.

use crate::graph::{Graph, Var};
use crate::params::{ParamId, Parameters};
use crate::SolverError;
use ndarray::Array2;
use rand::Rng;

/// Parameter ids for one learnable affine map `x·W + b`.
#[derive(Debug, Clone, Copy)]
pub struct AffineParams {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl AffineParams {
    pub fn init<R: Rng>(
        params: &mut Parameters,
        prefix: &str,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Result<Self, SolverError> {
        Ok(AffineParams {
            weight: params.add_xavier(&format!("{prefix}.weight"), rows, cols, rng)?,
            bias: params.add_zeros(&format!("{prefix}.bias"), 1, cols)?,
        })
    }

    /// All-zero initialization, for residual heads that should start as the
    /// identity contribution.
    pub fn init_zero(
        params: &mut Parameters,
        prefix: &str,
        rows: usize,
        cols: usize,
    ) -> Result<Self, SolverError> {
        Ok(AffineParams {
            weight: params.add_zeros(&format!("{prefix}.weight"), rows, cols)?,
            bias: params.add_zeros(&format!("{prefix}.bias"), 1, cols)?,
        })
    }
}

/// Applies `x·W + b`.
pub fn affine(g: &mut Graph, params: &Parameters, x: Var, p: AffineParams) -> Var {
    let w = g.param(params, p.weight);
    let b = g.param(params, p.bias);
    let xw = g.matmul(x, w);
    g.add_row(xw, b)
}

/// Parameter ids for layer norm's learnable gain and bias.
#[derive(Debug, Clone, Copy)]
pub struct LayerNormParams {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNormParams {
    pub fn init(params: &mut Parameters, prefix: &str, width: usize) -> Result<Self, SolverError> {
        Ok(LayerNormParams {
            gain: params.add_ones(&format!("{prefix}.gain"), 1, width)?,
            bias: params.add_zeros(&format!("{prefix}.bias"), 1, width)?,
        })
    }
}

/// Row-wise normalization followed by the learnable affine part.
pub fn layer_norm_block(g: &mut Graph, params: &Parameters, x: Var, p: LayerNormParams) -> Var {
    let normed = g.layer_norm(x);
    let gain = g.param(params, p.gain);
    let bias = g.param(params, p.bias);
    let scaled = g.mul_row(normed, gain);
    g.add_row(scaled, bias)
}

/// Parameter ids for one multi-head attention layer.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    /// Per-head (Wq, Wk, Wv), each `width × head_dim`.
    pub heads: Vec<(ParamId, ParamId, ParamId)>,
    pub output: AffineParams,
    pub head_dim: usize,
}

impl AttentionParams {
    pub fn init<R: Rng>(
        params: &mut Parameters,
        prefix: &str,
        width: usize,
        heads: usize,
        rng: &mut R,
    ) -> Result<Self, SolverError> {
        assert!(heads > 0 && width % heads == 0, "width must divide into heads");
        let head_dim = width / heads;
        let mut per_head = Vec::with_capacity(heads);
        for h in 0..heads {
            per_head.push((
                params.add_xavier(&format!("{prefix}.h{h}.wq"), width, head_dim, rng)?,
                params.add_xavier(&format!("{prefix}.h{h}.wk"), width, head_dim, rng)?,
                params.add_xavier(&format!("{prefix}.h{h}.wv"), width, head_dim, rng)?,
            ));
        }
        Ok(AttentionParams {
            heads: per_head,
            output: AffineParams::init(params, &format!("{prefix}.out"), width, width, rng)?,
            head_dim,
        })
    }
}

/// Output of one attention layer: the mixed tokens plus the head-averaged
/// attention matrix, read off the tape as a plain (constant) array.
pub struct AttentionOutput {
    pub tokens: Var,
    /// Head-averaged row-stochastic attention weights (n × n).
    pub propagation: Array2<f64>,
}

/// Multi-head scaled-dot-product self-attention. `mask`, when given, is
/// added to every head's score matrix before the softmax (use large
/// negative entries to forbid positions).
pub fn attention(
    g: &mut Graph,
    params: &Parameters,
    x: Var,
    p: &AttentionParams,
    mask: Option<&Array2<f64>>,
) -> AttentionOutput {
    let n = g.value(x).nrows();
    let scale = 1.0 / (p.head_dim as f64).sqrt();
    let mask_var = mask.map(|m| {
        assert_eq!(m.dim(), (n, n), "attention mask must be n×n");
        g.leaf(m.clone())
    });

    let mut mixed: Option<Var> = None;
    let mut prop_sum = Array2::<f64>::zeros((n, n));
    for (wq, wk, wv) in &p.heads {
        let wq = g.param(params, *wq);
        let wk = g.param(params, *wk);
        let wv = g.param(params, *wv);
        let q = g.matmul(x, wq);
        let k = g.matmul(x, wk);
        let v = g.matmul(x, wv);
        let kt = g.transpose(k);
        let scores_raw = g.matmul(q, kt);
        let mut scores = g.scale(scores_raw, scale);
        if let Some(m) = mask_var {
            scores = g.add(scores, m);
        }
        let weights = g.softmax_rows(scores);
        prop_sum += g.value(weights);
        let head_out = g.matmul(weights, v);
        mixed = Some(match mixed {
            None => head_out,
            Some(acc) => g.concat_cols(acc, head_out),
        });
    }
    let concat = mixed.expect("at least one head");
    let tokens = affine(g, params, concat, p.output);
    AttentionOutput {
        tokens,
        propagation: prop_sum / p.heads.len() as f64,
    }
}

/// Head-averaged attention weight matrix as a tape node (n × n,
/// row-stochastic). Used by the pure-mixing decoder mode, where the token
/// update must be exactly `P·x` for the captured `P`.
pub fn attention_weights_averaged(
    g: &mut Graph,
    params: &Parameters,
    x: Var,
    p: &AttentionParams,
    mask: Option<&Array2<f64>>,
) -> Var {
    let n = g.value(x).nrows();
    let scale = 1.0 / (p.head_dim as f64).sqrt();
    let mask_var = mask.map(|m| {
        assert_eq!(m.dim(), (n, n), "attention mask must be n×n");
        g.leaf(m.clone())
    });
    let mut sum: Option<Var> = None;
    for (wq, wk, _) in &p.heads {
        let wq = g.param(params, *wq);
        let wk = g.param(params, *wk);
        let q = g.matmul(x, wq);
        let k = g.matmul(x, wk);
        let kt = g.transpose(k);
        let scores_raw = g.matmul(q, kt);
        let mut scores = g.scale(scores_raw, scale);
        if let Some(m) = mask_var {
            scores = g.add(scores, m);
        }
        let weights = g.softmax_rows(scores);
        sum = Some(match sum {
            None => weights,
            Some(acc) => g.add(acc, weights),
        });
    }
    g.scale(sum.expect("at least one head"), 1.0 / p.heads.len() as f64)
}

/// Parameter ids for one pre-norm transformer block.
#[derive(Debug, Clone)]
pub struct BlockParams {
    pub attn_norm: LayerNormParams,
    pub attn: AttentionParams,
    pub ffn_norm: LayerNormParams,
    pub ffn_in: AffineParams,
    pub ffn_out: AffineParams,
}

impl BlockParams {
    pub fn init<R: Rng>(
        params: &mut Parameters,
        prefix: &str,
        width: usize,
        heads: usize,
        rng: &mut R,
    ) -> Result<Self, SolverError> {
        Ok(BlockParams {
            attn_norm: LayerNormParams::init(params, &format!("{prefix}.attn_norm"), width)?,
            attn: AttentionParams::init(params, &format!("{prefix}.attn"), width, heads, rng)?,
            ffn_norm: LayerNormParams::init(params, &format!("{prefix}.ffn_norm"), width)?,
            ffn_in: AffineParams::init(params, &format!("{prefix}.ffn_in"), width, 2 * width, rng)?,
            ffn_out: AffineParams::init(params, &format!("{prefix}.ffn_out"), 2 * width, width, rng)?,
        })
    }
}

/// Position-wise feed-forward: width → 2·width → tanh → width.
pub fn feed_forward(
    g: &mut Graph,
    params: &Parameters,
    x: Var,
    ffn_in: AffineParams,
    ffn_out: AffineParams,
) -> Var {
    let hidden = affine(g, params, x, ffn_in);
    let act = g.tanh(hidden);
    affine(g, params, act, ffn_out)
}

/// Pre-norm residual transformer block:
/// `x += attn(norm(x)); x += ffn(norm(x))`. Returns the new tokens and the
/// head-averaged attention weights of this block.
pub fn attention_block(
    g: &mut Graph,
    params: &Parameters,
    x: Var,
    p: &BlockParams,
    mask: Option<&Array2<f64>>,
) -> (Var, Array2<f64>) {
    let normed = layer_norm_block(g, params, x, p.attn_norm);
    let attn_out = attention(g, params, normed, &p.attn, mask);
    let x = g.add(x, attn_out.tokens);
    let normed = layer_norm_block(g, params, x, p.ffn_norm);
    let ffn = feed_forward(g, params, normed, p.ffn_in, p.ffn_out);
    (g.add(x, ffn), attn_out.propagation)
}

/// Parameter ids for one residual temporal-convolution block over the token
/// axis with kernel footprint {-1, 0, +1}.
#[derive(Debug, Clone)]
pub struct ConvBlockParams {
    /// Taps ordered by offset: [-1, 0, +1], each `width × width`.
    pub taps: [ParamId; 3],
    pub bias: ParamId,
}

impl ConvBlockParams {
    pub fn init<R: Rng>(
        params: &mut Parameters,
        prefix: &str,
        width: usize,
        rng: &mut R,
    ) -> Result<Self, SolverError> {
        Ok(ConvBlockParams {
            taps: [
                params.add_xavier(&format!("{prefix}.tap_m1"), width, width, rng)?,
                params.add_xavier(&format!("{prefix}.tap_0"), width, width, rng)?,
                params.add_xavier(&format!("{prefix}.tap_p1"), width, width, rng)?,
            ],
            bias: params.add_zeros(&format!("{prefix}.bias"), 1, width)?,
        })
    }
}

/// Residual convolution along the token axis with zero padding:
/// `x += tanh(Σ_k shift(x, k)·W_k + b)`.
pub fn conv_block(g: &mut Graph, params: &Parameters, x: Var, p: &ConvBlockParams) -> Var {
    let mut acc: Option<Var> = None;
    for (tap, offset) in p.taps.iter().zip([-1isize, 0, 1]) {
        let shifted = if offset == 0 { x } else { g.shift_rows(x, offset) };
        let w = g.param(params, *tap);
        let term = g.matmul(shifted, w);
        acc = Some(match acc {
            None => term,
            Some(a) => g.add(a, term),
        });
    }
    let b = g.param(params, p.bias);
    let pre = g.add_row(acc.expect("three taps"), b);
    let act = g.tanh(pre);
    g.add(x, act)
}
