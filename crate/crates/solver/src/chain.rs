//! Captured decoder-attention propagation and its analysis.
//!
//! The position solver's decoder mixes a joint token set of markers and
//! joints; each layer's head-averaged attention matrix is a row-stochastic
//! propagation step. Composing steps exposes multi-hop marker→joint→marker
//! influence paths, which is the basis of the chain report.

use crate::SolverError;
use ndarray::Array2;

/// How strictly each captured layer must be row-stochastic.
pub const ROW_SUM_TOL: f64 = 1e-6;
/// Looser bound for products of stochastic matrices (error compounds).
pub const COMPOSED_ROW_SUM_TOL: f64 = 1e-5;

/// What a token in the joint marker∪joint set refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Marker(usize),
    Joint(usize),
}

/// Per-layer decoder attention matrices over the `markers + joints` token
/// set, ordered input→output.
#[derive(Debug, Clone)]
pub struct ChainPropagation {
    layers: Vec<Array2<f64>>,
    markers: usize,
    joints: usize,
}

impl ChainPropagation {
    /// Validates shapes and row sums of every captured layer.
    pub fn new(
        layers: Vec<Array2<f64>>,
        markers: usize,
        joints: usize,
    ) -> Result<Self, SolverError> {
        let tokens = markers + joints;
        for (t, layer) in layers.iter().enumerate() {
            if layer.dim() != (tokens, tokens) {
                return Err(SolverError::ShapeMismatch {
                    expected: format!("{tokens}×{tokens} propagation"),
                    got: format!("{}×{} at layer {t}", layer.nrows(), layer.ncols()),
                });
            }
            for (r, row) in layer.rows().into_iter().enumerate() {
                let sum = row.sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(SolverError::NotRowStochastic { layer: t, row: r, sum });
                }
            }
        }
        Ok(ChainPropagation { layers, markers, joints })
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn marker_count(&self) -> usize {
        self.markers
    }

    pub fn joint_count(&self) -> usize {
        self.joints
    }

    pub fn token_count(&self) -> usize {
        self.markers + self.joints
    }

    pub fn token_kind(&self, token: usize) -> TokenKind {
        if token < self.markers {
            TokenKind::Marker(token)
        } else {
            TokenKind::Joint(token - self.markers)
        }
    }

    /// Product over all layers: `P⁽ᴸ⁻¹⁾ ⋯ P⁽⁰⁾`.
    pub fn composed(&self) -> Array2<f64> {
        compose_propagation(self, 0, self.layers.len() - 1)
    }
}

/// Composes propagation steps `from_step..=to_step` as a left-growing
/// product: the result maps step-`from` token states to step-`to+1` states,
/// i.e. `P⁽ᵗᵒ⁾ ⋯ P⁽ᶠʳᵒᵐ⁾`.
pub fn compose_propagation(
    chain: &ChainPropagation,
    from_step: usize,
    to_step: usize,
) -> Array2<f64> {
    assert!(
        from_step <= to_step && to_step < chain.layers.len(),
        "step range {from_step}..={to_step} outside 0..{}",
        chain.layers.len()
    );
    let mut composed = chain.layers[from_step].clone();
    for step in from_step + 1..=to_step {
        composed = chain.layers[step].dot(&composed);
    }
    composed
}

/// One row of a chain report: how much composed attention the queried token
/// places on `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReportEntry {
    pub source: TokenKind,
    pub weight: f64,
}

/// Ranks every source token by the queried token's composed attention
/// weight, descending; ties broken by token index so output is stable.
/// `layer`, when given, reports a single layer instead of the full product.
pub fn chain_report(
    chain: &ChainPropagation,
    token: usize,
    layer: Option<usize>,
) -> Vec<ChainReportEntry> {
    assert!(token < chain.token_count(), "token index out of range");
    let matrix = match layer {
        Some(t) => chain.layers[t].clone(),
        None => chain.composed(),
    };
    let mut entries: Vec<ChainReportEntry> = matrix
        .row(token)
        .iter()
        .enumerate()
        .map(|(i, &weight)| ChainReportEntry {
            source: chain.token_kind(i),
            weight,
        })
        .collect();
    entries.sort_by(|a, b| b.weight.partial_cmp(&a.weight).unwrap());
    entries
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Array2<f64> {
        Array2::from_elem((n, n), 1.0 / n as f64)
    }

    #[test]
    fn validation_rejects_non_stochastic_rows() {
        let mut bad = uniform(3);
        bad[(1, 0)] += 0.5;
        let err = ChainPropagation::new(vec![uniform(3), bad], 2, 1).unwrap_err();
        match err {
            SolverError::NotRowStochastic { layer, row, sum } => {
                assert_eq!((layer, row), (1, 1));
                assert!((sum - 1.5).abs() < 1e-12);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn single_layer_composition_is_that_layer() {
        let p = uniform(4);
        let chain = ChainPropagation::new(vec![p.clone()], 3, 1).unwrap();
        assert_eq!(compose_propagation(&chain, 0, 0), p);
    }

    #[test]
    fn uniform_mixing_is_idempotent_under_composition() {
        let chain = ChainPropagation::new(vec![uniform(5); 3], 3, 2).unwrap();
        let composed = chain.composed();
        for v in composed.iter() {
            assert!((v - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn report_ranks_descending_and_labels_tokens() {
        let mut p = Array2::zeros((3, 3));
        p.row_mut(0).assign(&ndarray::array![0.2, 0.3, 0.5]);
        p.row_mut(1).assign(&ndarray::array![1.0, 0.0, 0.0]);
        p.row_mut(2).assign(&ndarray::array![0.0, 1.0, 0.0]);
        let chain = ChainPropagation::new(vec![p], 2, 1).unwrap();
        let report = chain_report(&chain, 0, None);
        assert_eq!(report[0].source, TokenKind::Joint(0));
        assert!((report[0].weight - 0.5).abs() < 1e-12);
        assert_eq!(report[1].source, TokenKind::Marker(1));
        assert_eq!(report[2].source, TokenKind::Marker(0));
    }

    #[test]
    fn identity_attention_reports_self_weight_one() {
        let chain = ChainPropagation::new(vec![Array2::eye(4); 2], 3, 1).unwrap();
        let report = chain_report(&chain, 2, None);
        assert_eq!(report[0].source, TokenKind::Marker(2));
        assert_eq!(report[0].weight, 1.0);
        assert!(report[1..].iter().all(|e| e.weight == 0.0));
    }
}
