//! Named, index-stable parameter storage shared by the solvers and the
//! optimizer. Insertion order is the canonical order for serialization and
//! for the optimizer's moment buffers, which is what makes training runs
//! reproducible.

use crate::SolverError;
use ndarray::Array2;
use rand::Rng;
use std::collections::HashMap;

/// Stable identifier of one parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Ordered collection of named 2-D parameter tensors.
#[derive(Debug, Clone, Default)]
pub struct Parameters {
    entries: Vec<(String, Array2<f64>)>,
    index: HashMap<String, usize>,
}

impl Parameters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor under a unique name.
    pub fn add(&mut self, name: &str, value: Array2<f64>) -> Result<ParamId, SolverError> {
        if self.index.contains_key(name) {
            return Err(SolverError::DuplicateParameter(name.to_string()));
        }
        let id = ParamId(self.entries.len());
        self.index.insert(name.to_string(), id.0);
        self.entries.push((name.to_string(), value));
        Ok(id)
    }

    /// Xavier-uniform initialized matrix: U(±√(6/(fan_in+fan_out))).
    pub fn add_xavier<R: Rng>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Result<ParamId, SolverError> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let value = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound));
        self.add(name, value)
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId, SolverError> {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn add_ones(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId, SolverError> {
        self.add(name, Array2::ones((rows, cols)))
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.entries[id.0].1
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.entries[id.0].1
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Iterates in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Array2<f64>)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (name, value))| (ParamId(i), name.as_str(), value))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    /// Total scalar count across all tensors.
    pub fn total_scalars(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.len()).sum()
    }

    /// Zeroed gradient accumulators, one per parameter, shape-matched.
    pub fn zeroed_like(&self) -> Vec<Array2<f64>> {
        self.entries
            .iter()
            .map(|(_, v)| Array2::zeros(v.dim()))
            .collect()
    }
}
