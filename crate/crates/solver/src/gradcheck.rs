//! Finite-difference verification of tape gradients.
//!
//! The checker clones the parameter store, evaluates the analytic gradient
//! once, then re-evaluates the loss with individual scalars nudged by ±h
//! and compares the central difference against the analytic value. Models
//! participate through their `forward_with` entry points, which read
//! parameter values from an injected store.

use crate::graph::{Graph, Var};
use crate::params::Parameters;
use crate::SolverError;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-6;

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error seen per parameter block that was sampled.
    pub per_block: Vec<(String, f64)>,
    pub max_relative_error: f64,
    /// Number of scalar comparisons performed.
    pub samples: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

fn eval_loss<F>(params: &Parameters, build: &F) -> Result<f64, SolverError>
where
    F: Fn(&Parameters, &mut Graph) -> Result<Var, SolverError>,
{
    let mut g = Graph::new();
    let loss = build(params, &mut g)?;
    Ok(g.value(loss)[(0, 0)])
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn check_entries<F>(
    params: &Parameters,
    entries: &[(usize, usize)],
    build: F,
) -> Result<GradCheckReport, SolverError>
where
    F: Fn(&Parameters, &mut Graph) -> Result<Var, SolverError>,
{
    let mut work = params.clone();
    let mut g = Graph::new();
    let loss = build(&work, &mut g)?;
    let grads = g.backward(loss);
    let analytic: Vec<Option<Array2<f64>>> =
        work.ids().map(|id| grads.for_param(id)).collect();

    let mut per_block: Vec<(String, f64)> = Vec::new();
    let mut max_rel = 0.0f64;
    for &(block, offset) in entries {
        let id = work.ids().nth(block).expect("block index in range");
        let cols = work.get(id).ncols();
        let cell = (offset / cols, offset % cols);
        let original = work.get(id)[cell];

        work.get_mut(id)[cell] = original + GRADCHECK_STEP;
        let plus = eval_loss(&work, &build)?;
        work.get_mut(id)[cell] = original - GRADCHECK_STEP;
        let minus = eval_loss(&work, &build)?;
        work.get_mut(id)[cell] = original;

        let numeric = (plus - minus) / (2.0 * GRADCHECK_STEP);
        let analytic_value = analytic[block].as_ref().map(|a| a[cell]).unwrap_or(0.0);
        let rel = relative_error(analytic_value, numeric);
        max_rel = max_rel.max(rel);

        let name = work.name(id).to_string();
        match per_block.iter_mut().find(|(n, _)| *n == name) {
            Some((_, worst)) => *worst = worst.max(rel),
            None => per_block.push((name, rel)),
        }
    }
    Ok(GradCheckReport {
        per_block,
        max_relative_error: max_rel,
        samples: entries.len(),
    })
}

/// Checks every scalar of every parameter block. Use only on small models.
pub fn gradcheck_all_params<F>(
    params: &Parameters,
    build: F,
) -> Result<GradCheckReport, SolverError>
where
    F: Fn(&Parameters, &mut Graph) -> Result<Var, SolverError>,
{
    let mut entries = Vec::new();
    for (block, (_, _, value)) in params.iter().enumerate() {
        for offset in 0..value.len() {
            entries.push((block, offset));
        }
    }
    check_entries(params, &entries, build)
}

/// Checks `count` scalars sampled uniformly over the flattened parameter
/// vector, so large blocks are proportionally represented.
pub fn gradcheck_sampled<F>(
    params: &Parameters,
    count: usize,
    seed: u64,
    build: F,
) -> Result<GradCheckReport, SolverError>
where
    F: Fn(&Parameters, &mut Graph) -> Result<Var, SolverError>,
{
    let sizes: Vec<usize> = params.iter().map(|(_, _, v)| v.len()).collect();
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(SolverError::ContractViolation(
            "gradient check needs at least one parameter",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut flat = rng.gen_range(0..total);
        let mut block = 0usize;
        while flat >= sizes[block] {
            flat -= sizes[block];
            block += 1;
        }
        entries.push((block, flat));
    }
    check_entries(params, &entries, build)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quadratic_in_one_parameter_checks_exactly() {
        let mut params = Parameters::new();
        params.add("w", array![[1.5, -0.5], [0.25, 2.0]]).unwrap();
        let report = gradcheck_all_params(&params, |p, g| {
            let w = g.param(p, p.id_of("w").unwrap());
            Ok(g.mean_sq(w))
        })
        .unwrap();
        assert_eq!(report.samples, 4);
        assert!(report.passes(1e-7), "max rel {}", report.max_relative_error);
    }

    #[test]
    fn sampling_covers_blocks_proportionally() {
        let mut params = Parameters::new();
        params.add("a", Array2::from_elem((1, 1), 0.7)).unwrap();
        params.add("b", Array2::from_elem((10, 10), 0.1)).unwrap();
        let report = gradcheck_sampled(&params, 50, 99, |p, g| {
            let a = g.param(p, p.id_of("a").unwrap());
            let b = g.param(p, p.id_of("b").unwrap());
            let bs = g.mean_sq(b);
            let as_ = g.mean_sq(a);
            Ok(g.add(as_, bs))
        })
        .unwrap();
        assert!(report.passes(1e-7));
        // with 50 draws over 101 scalars, the 100-entry block dominates
        let b_entry = report.per_block.iter().find(|(n, _)| n == "b");
        assert!(b_entry.is_some());
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // mean_sq gradient is 2x/n; sabotage by building a loss whose
        // analytic gradient differs from the evaluated loss: scale the
        // value AFTER backward via a mismatched build closure pair is not
        // possible here, so instead check that a nonlinear loss at a
        // non-stationary point yields nonzero error when compared against
        // a zeroed analytic gradient (leaf, not param).
        let mut params = Parameters::new();
        params.add("w", array![[0.3]]).unwrap();
        let mut fake = Parameters::new();
        fake.add("w", array![[0.3]]).unwrap();
        // Build reads from the injected store but routes the value through
        // a constant leaf, so the analytic gradient for the param is zero
        // while the numeric one is not.
        let report = gradcheck_all_params(&params, |p, g| {
            let w = g.leaf(p.get(p.id_of("w").unwrap()).clone());
            Ok(g.mean_sq(w))
        })
        .unwrap();
        assert!(report.max_relative_error > 0.9);
    }
}
