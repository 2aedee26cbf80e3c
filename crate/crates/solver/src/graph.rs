//! Reverse-mode automatic differentiation over dense 2-D arrays.
//!
//! A [`Graph`] is a tape rebuilt per forward pass: every operation appends a
//! node holding its value and the recipe to push gradients back to its
//! inputs. Nodes are referenced by [`Var`] handles and are topologically
//! ordered by construction, so backpropagation is a single reverse sweep.

use crate::params::{ParamId, Parameters};
use ndarray::{concatenate, s, Array2, Axis};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Keeps `‖v‖` gradients finite at the origin without changing values.
const NORM_FLOOR: f64 = 1e-12;
/// Layer-normalization variance floor.
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
enum Op {
    Leaf { param: Option<ParamId> },
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    /// Broadcast-add a 1×c row to every row of a.
    AddRow { a: usize, row: usize },
    /// Broadcast-multiply every row of a by a 1×c row.
    MulRow { a: usize, row: usize },
    Scale(usize, f64),
    Tanh(usize),
    SoftmaxRows(usize),
    LayerNorm(usize),
    Transpose(usize),
    ConcatRows(usize, usize),
    ConcatCols(usize, usize),
    SliceRows { a: usize, start: usize, len: usize },
    /// y[i] = x[i + offset], zero outside range (token-axis shift).
    ShiftRows { a: usize, offset: isize },
    /// Scalar mean of squared entries.
    MeanSq(usize),
    /// Scalar Σᵢ wᵢ·‖Aᵢ‖ over rows.
    WeightedRowNormSum { a: usize, weights: Vec<f64> },
    /// Scalar Σᵢ wᵢ·‖Aᵢ‖² over rows.
    WeightedRowSqNormSum { a: usize, weights: Vec<f64> },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

/// Define-by-run tape. All shapes are checked at operation time with
/// panics — shape errors on the tape are programming bugs, not input errors.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; receives no gradient of interest.
    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf { param: None })
    }

    /// Copy of a stored parameter; its gradient is collected under `id`.
    pub fn param(&mut self, params: &Parameters, id: ParamId) -> Var {
        self.push(params.get(id).clone(), Op::Leaf { param: Some(id) })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        self.push(value, Op::MatMul(a.0, b.0))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = &self.nodes[a.0].value + &self.nodes[b.0].value;
        self.push(value, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = &self.nodes[a.0].value - &self.nodes[b.0].value;
        self.push(value, Op::Sub(a.0, b.0))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.nodes[row.0].value.nrows(), 1, "add_row wants a 1×c row");
        let value = &self.nodes[a.0].value + &self.nodes[row.0].value;
        self.push(value, Op::AddRow { a: a.0, row: row.0 })
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.nodes[row.0].value.nrows(), 1, "mul_row wants a 1×c row");
        let value = &self.nodes[a.0].value * &self.nodes[row.0].value;
        self.push(value, Op::MulRow { a: a.0, row: row.0 })
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = &self.nodes[a.0].value * factor;
        self.push(value, Op::Scale(a.0, factor))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.mapv(f64::tanh);
        self.push(value, Op::Tanh(a.0))
    }

    /// Row-wise softmax with the max-subtraction trick. Output rows sum to 1.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut value = self.nodes[a.0].value.clone();
        for mut row in value.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|x| (x - max).exp());
            let sum: f64 = row.sum();
            row.mapv_inplace(|x| x / sum);
        }
        self.push(value, Op::SoftmaxRows(a.0))
    }

    /// Row-wise normalization to zero mean, unit variance (no affine part;
    /// compose with `mul_row`/`add_row` for learnable gain and bias).
    pub fn layer_norm(&mut self, a: Var) -> Var {
        let x = &self.nodes[a.0].value;
        let mut value = x.clone();
        for mut row in value.rows_mut() {
            let n = row.len() as f64;
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sigma = (var + LAYER_NORM_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) / sigma);
        }
        self.push(value, Op::LayerNorm(a.0))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.t().to_owned();
        self.push(value, Op::Transpose(a.0))
    }

    pub fn concat_rows(&mut self, a: Var, b: Var) -> Var {
        let value = concatenate![Axis(0), self.nodes[a.0].value, self.nodes[b.0].value];
        self.push(value, Op::ConcatRows(a.0, b.0))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let value = concatenate![Axis(1), self.nodes[a.0].value, self.nodes[b.0].value];
        self.push(value, Op::ConcatCols(a.0, b.0))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let value = self.nodes[a.0]
            .value
            .slice(s![start..start + len, ..])
            .to_owned();
        self.push(value, Op::SliceRows { a: a.0, start, len })
    }

    /// Token-axis shift with zero padding: `y[i] = x[i + offset]`.
    pub fn shift_rows(&mut self, a: Var, offset: isize) -> Var {
        let x = &self.nodes[a.0].value;
        let (n, c) = x.dim();
        let mut value = Array2::zeros((n, c));
        for i in 0..n as isize {
            let src = i + offset;
            if src >= 0 && (src as usize) < n {
                value
                    .row_mut(i as usize)
                    .assign(&x.row(src as usize));
            }
        }
        self.push(value, Op::ShiftRows { a: a.0, offset })
    }

    /// 1×1 scalar: mean of squared entries.
    pub fn mean_sq(&mut self, a: Var) -> Var {
        let x = &self.nodes[a.0].value;
        let n = (x.nrows() * x.ncols()) as f64;
        let value = Array2::from_elem((1, 1), x.iter().map(|v| v * v).sum::<f64>() / n);
        self.push(value, Op::MeanSq(a.0))
    }

    /// 1×1 scalar: Σᵢ wᵢ·‖Aᵢ‖ over rows. The gradient at a zero row is
    /// taken as zero (subgradient), so exact matches stay differentiable.
    pub fn weighted_row_norm_sum(&mut self, a: Var, weights: Vec<f64>) -> Var {
        let x = &self.nodes[a.0].value;
        assert_eq!(weights.len(), x.nrows());
        let total: f64 = x
            .rows()
            .into_iter()
            .zip(&weights)
            .map(|(row, w)| w * row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        self.push(
            Array2::from_elem((1, 1), total),
            Op::WeightedRowNormSum { a: a.0, weights },
        )
    }

    /// 1×1 scalar: Σᵢ wᵢ·‖Aᵢ‖² over rows.
    pub fn weighted_row_sqnorm_sum(&mut self, a: Var, weights: Vec<f64>) -> Var {
        let x = &self.nodes[a.0].value;
        assert_eq!(weights.len(), x.nrows());
        let total: f64 = x
            .rows()
            .into_iter()
            .zip(&weights)
            .map(|(row, w)| w * row.iter().map(|v| v * v).sum::<f64>())
            .sum();
        self.push(
            Array2::from_elem((1, 1), total),
            Op::WeightedRowSqNormSum { a: a.0, weights },
        )
    }

    /// Backpropagates from a 1×1 scalar node. Returns per-node gradients;
    /// use [`Gradients::for_param`] / [`Gradients::accumulate_params`] to
    /// collect parameter gradients.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(
            self.nodes[loss.0].value.dim(),
            (1, 1),
            "backward starts from a scalar"
        );
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Array2::ones((1, 1)));
        for i in (0..=loss.0).rev() {
            let Some(grad) = grads[i].take() else { continue };
            self.push_back(i, &grad, &mut grads);
            grads[i] = Some(grad);
        }
        Gradients {
            by_node: grads,
            params: self
                .nodes
                .iter()
                .enumerate()
                .filter_map(|(i, n)| match n.op {
                    Op::Leaf { param: Some(id) } => Some((i, id)),
                    _ => None,
                })
                .collect(),
        }
    }

    fn accumulate(grads: &mut [Option<Array2<f64>>], idx: usize, delta: Array2<f64>) {
        match &mut grads[idx] {
            Some(g) => *g += &delta,
            slot @ None => *slot = Some(delta),
        }
    }

    fn push_back(&self, i: usize, grad: &Array2<f64>, grads: &mut [Option<Array2<f64>>]) {
        match &self.nodes[i].op {
            Op::Leaf { .. } => {}
            Op::MatMul(a, b) => {
                let da = grad.dot(&self.nodes[*b].value.t());
                let db = self.nodes[*a].value.t().dot(grad);
                Self::accumulate(grads, *a, da);
                Self::accumulate(grads, *b, db);
            }
            Op::Add(a, b) => {
                Self::accumulate(grads, *a, grad.clone());
                Self::accumulate(grads, *b, grad.clone());
            }
            Op::Sub(a, b) => {
                Self::accumulate(grads, *a, grad.clone());
                Self::accumulate(grads, *b, -grad.clone());
            }
            Op::AddRow { a, row } => {
                Self::accumulate(grads, *a, grad.clone());
                let row_grad = grad.sum_axis(Axis(0)).insert_axis(Axis(0));
                Self::accumulate(grads, *row, row_grad);
            }
            Op::MulRow { a, row } => {
                let da = grad * &self.nodes[*row].value;
                let drow = (grad * &self.nodes[*a].value)
                    .sum_axis(Axis(0))
                    .insert_axis(Axis(0));
                Self::accumulate(grads, *a, da);
                Self::accumulate(grads, *row, drow);
            }
            Op::Scale(a, factor) => {
                Self::accumulate(grads, *a, grad * *factor);
            }
            Op::Tanh(a) => {
                let y = &self.nodes[i].value;
                let da = grad * &y.mapv(|v| 1.0 - v * v);
                Self::accumulate(grads, *a, da);
            }
            Op::SoftmaxRows(a) => {
                let y = &self.nodes[i].value;
                let mut da = Array2::zeros(y.dim());
                for r in 0..y.nrows() {
                    let yr = y.row(r);
                    let gr = grad.row(r);
                    let dot: f64 = yr.iter().zip(gr.iter()).map(|(yv, gv)| yv * gv).sum();
                    for c in 0..y.ncols() {
                        da[(r, c)] = yr[c] * (gr[c] - dot);
                    }
                }
                Self::accumulate(grads, *a, da);
            }
            Op::LayerNorm(a) => {
                // dx = (dy - mean(dy) - y*mean(dy ⊙ y)) / σ, per row
                let x = &self.nodes[*a].value;
                let y = &self.nodes[i].value;
                let mut da = Array2::zeros(x.dim());
                for r in 0..x.nrows() {
                    let n = x.ncols() as f64;
                    let mean = x.row(r).sum() / n;
                    let var = x.row(r).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let sigma = (var + LAYER_NORM_EPS).sqrt();
                    let gy = grad.row(r);
                    let yr = y.row(r);
                    let g_mean = gy.sum() / n;
                    let gy_dot_y = gy.iter().zip(yr.iter()).map(|(g, v)| g * v).sum::<f64>() / n;
                    for c in 0..x.ncols() {
                        da[(r, c)] = (gy[c] - g_mean - yr[c] * gy_dot_y) / sigma;
                    }
                }
                Self::accumulate(grads, *a, da);
            }
            Op::Transpose(a) => {
                Self::accumulate(grads, *a, grad.t().to_owned());
            }
            Op::ConcatRows(a, b) => {
                let na = self.nodes[*a].value.nrows();
                let da = grad.slice(s![..na, ..]).to_owned();
                let db = grad.slice(s![na.., ..]).to_owned();
                Self::accumulate(grads, *a, da);
                Self::accumulate(grads, *b, db);
            }
            Op::ConcatCols(a, b) => {
                let ca = self.nodes[*a].value.ncols();
                let da = grad.slice(s![.., ..ca]).to_owned();
                let db = grad.slice(s![.., ca..]).to_owned();
                Self::accumulate(grads, *a, da);
                Self::accumulate(grads, *b, db);
            }
            Op::SliceRows { a, start, len } => {
                let mut da = Array2::zeros(self.nodes[*a].value.dim());
                da.slice_mut(s![*start..*start + *len, ..]).assign(grad);
                Self::accumulate(grads, *a, da);
            }
            Op::ShiftRows { a, offset } => {
                // dX[i + offset] += dY[i]  ⟺  dX = shift(dY, -offset)
                let (n, c) = grad.dim();
                let mut da = Array2::zeros((n, c));
                for i in 0..n as isize {
                    let src = i + offset;
                    if src >= 0 && (src as usize) < n {
                        let mut target = da.row_mut(src as usize);
                        target += &grad.row(i as usize);
                    }
                }
                Self::accumulate(grads, *a, da);
            }
            Op::MeanSq(a) => {
                let x = &self.nodes[*a].value;
                let n = (x.nrows() * x.ncols()) as f64;
                let da = x.mapv(|v| 2.0 * v / n) * grad[(0, 0)];
                Self::accumulate(grads, *a, da);
            }
            Op::WeightedRowNormSum { a, weights } => {
                let x = &self.nodes[*a].value;
                let g = grad[(0, 0)];
                let mut da = Array2::zeros(x.dim());
                for (r, w) in weights.iter().enumerate() {
                    let norm = x.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                    let denom = norm.max(NORM_FLOOR);
                    for c in 0..x.ncols() {
                        da[(r, c)] = g * w * x[(r, c)] / denom;
                    }
                }
                Self::accumulate(grads, *a, da);
            }
            Op::WeightedRowSqNormSum { a, weights } => {
                let x = &self.nodes[*a].value;
                let g = grad[(0, 0)];
                let mut da = Array2::zeros(x.dim());
                for (r, w) in weights.iter().enumerate() {
                    for c in 0..x.ncols() {
                        da[(r, c)] = g * w * 2.0 * x[(r, c)];
                    }
                }
                Self::accumulate(grads, *a, da);
            }
        }
    }
}

/// Result of a backward pass.
pub struct Gradients {
    by_node: Vec<Option<Array2<f64>>>,
    /// (node index, parameter id) for every parameter leaf on the tape.
    params: Vec<(usize, ParamId)>,
}

impl Gradients {
    pub fn for_node(&self, v: Var) -> Option<&Array2<f64>> {
        self.by_node[v.0].as_ref()
    }

    /// Gradient for a parameter, summed over all tape occurrences of it.
    pub fn for_param(&self, id: ParamId) -> Option<Array2<f64>> {
        let mut acc: Option<Array2<f64>> = None;
        for (node, pid) in &self.params {
            if *pid == id {
                if let Some(g) = &self.by_node[*node] {
                    match &mut acc {
                        Some(a) => *a += g,
                        slot @ None => *slot = Some(g.clone()),
                    }
                }
            }
        }
        acc
    }

    /// Adds every parameter gradient into `sink[id]` (shape-matched dense
    /// accumulators), the batching primitive for training.
    pub fn accumulate_params(&self, sink: &mut [Array2<f64>]) {
        for (node, pid) in &self.params {
            if let Some(g) = &self.by_node[*node] {
                sink[pid.index()] += g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matmul_gradients_match_the_analytic_form() {
        let mut g = Graph::new();
        let a = g.leaf(array![[1.0, 2.0], [3.0, 4.0]]);
        let b = g.leaf(array![[5.0], [6.0]]);
        let c = g.matmul(a, b); // [[17],[39]]
        let loss = g.mean_sq(c); // (17² + 39²)/2
        let grads = g.backward(loss);
        assert_eq!(g.value(c), &array![[17.0], [39.0]]);
        // dL/dc = c (since mean over 2 entries of squares → 2c/2)
        let dc = array![[17.0], [39.0]];
        let da = grads.for_node(a).unwrap();
        let db = grads.for_node(b).unwrap();
        assert_eq!(da, &dc.dot(&array![[5.0, 6.0]]));
        assert_eq!(db, &array![[1.0, 3.0], [2.0, 4.0]].dot(&dc));
    }

    #[test]
    fn softmax_rows_sum_to_one_and_grads_sum_to_zero() {
        let mut g = Graph::new();
        let a = g.leaf(array![[1.0, 2.0, 3.0], [-1.0, 0.0, 1.0]]);
        let y = g.softmax_rows(a);
        for row in g.value(y).rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        let loss = g.mean_sq(y);
        let grads = g.backward(loss);
        // softmax gradient rows are orthogonal to the all-ones direction
        for row in grads.for_node(a).unwrap().rows() {
            assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn shift_rows_round_trips_through_its_adjoint() {
        let mut g = Graph::new();
        let a = g.leaf(array![[1.0], [2.0], [3.0], [4.0]]);
        let y = g.shift_rows(a, 1); // y[i] = x[i+1]
        assert_eq!(g.value(y), &array![[2.0], [3.0], [4.0], [0.0]]);
        let loss = g.mean_sq(y);
        let grads = g.backward(loss);
        // dL/dy = y/2; adjoint scatters back one row down
        assert_eq!(grads.for_node(a).unwrap(), &array![[0.0], [1.0], [1.5], [2.0]]);
    }

    #[test]
    fn weighted_row_norm_handles_exact_zero_rows() {
        let mut g = Graph::new();
        let a = g.leaf(array![[3.0, 4.0], [0.0, 0.0]]);
        let y = g.weighted_row_norm_sum(a, vec![0.5, 0.5]);
        assert_eq!(g.value(y)[(0, 0)], 2.5);
        let grads = g.backward(y);
        let da = grads.for_node(a).unwrap();
        assert!((da[(0, 0)] - 0.5 * 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(da[(1, 0)], 0.0, "zero row takes the zero subgradient");
        assert!(da.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn repeated_parameter_use_accumulates_gradients() {
        use crate::params::Parameters;
        let mut params = Parameters::new();
        let id = params.add("w", array![[2.0]]).unwrap();
        let mut g = Graph::new();
        let w1 = g.param(&params, id);
        let w2 = g.param(&params, id);
        let prod = g.matmul(w1, w2); // w² = 4
        let loss = g.mean_sq(prod); // w⁴ = 16, d/dw = 4w³ = 32
        let grads = g.backward(loss);
        let dw = grads.for_param(id).unwrap();
        assert!((dw[(0, 0)] - 32.0).abs() < 1e-12);
    }
}
