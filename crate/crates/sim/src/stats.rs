//! Occlusion statistics and KL-divergence camera-rig selection.

use crate::{simulate_visibility, CameraRig, Scene, SimError, VisibilityMask};
use std::collections::BTreeMap;

/// Per-marker occlusion summary: the fraction of frames occluded and the
/// lengths of the maximal consecutive occlusion runs.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionStats {
    /// Occluded frames / total frames, per marker.
    pub probabilities: Vec<f64>,
    /// Maximal occlusion run lengths (frames), per marker, in order of
    /// occurrence.
    pub runs: Vec<Vec<usize>>,
}

impl OcclusionStats {
    pub fn marker_count(&self) -> usize {
        self.probabilities.len()
    }

    /// Run-length histogram for one marker: length → count. The counts sum
    /// to that marker's number of runs.
    pub fn run_histogram(&self, marker: usize) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for &len in &self.runs[marker] {
            *hist.entry(len).or_insert(0) += 1;
        }
        hist
    }

    pub fn mean_run_length(&self, marker: usize) -> f64 {
        if self.runs[marker].is_empty() {
            return 0.0;
        }
        self.runs[marker].iter().sum::<usize>() as f64 / self.runs[marker].len() as f64
    }
}

/// Per-marker occlusion probability and run lengths of a visibility mask.
pub fn occlusion_stats(mask: &VisibilityMask) -> OcclusionStats {
    let markers = mask.marker_count();
    let frames = mask.frame_count();
    let mut probabilities = vec![0.0; markers];
    let mut runs: Vec<Vec<usize>> = vec![Vec::new(); markers];
    for m in 0..markers {
        let mut occluded_frames = 0usize;
        let mut current_run = 0usize;
        for f in 0..frames {
            if mask.frames[f][m] {
                if current_run > 0 {
                    runs[m].push(current_run);
                    current_run = 0;
                }
            } else {
                occluded_frames += 1;
                current_run += 1;
            }
        }
        if current_run > 0 {
            runs[m].push(current_run);
        }
        if frames > 0 {
            probabilities[m] = occluded_frames as f64 / frames as f64;
        }
    }
    OcclusionStats {
        probabilities,
        runs,
    }
}

/// KL divergence `Σ p·ln(p/q)` between two discrete distributions after
/// additive smoothing and renormalization of both. Inputs need not be
/// normalized; they must share a support size and `smoothing` must be
/// positive so no bin is empty.
pub fn kl_divergence(p: &[f64], q: &[f64], smoothing: f64) -> Result<f64, SimError> {
    if p.len() != q.len() || p.is_empty() {
        return Err(SimError::SupportMismatch {
            p: p.len(),
            q: q.len(),
        });
    }
    if smoothing <= 0.0 {
        return Err(SimError::InvalidSmoothing(smoothing));
    }
    let norm = |xs: &[f64]| -> Vec<f64> {
        let total: f64 = xs.iter().map(|x| x + smoothing).sum();
        xs.iter().map(|x| (x + smoothing) / total).collect()
    };
    let ps = norm(p);
    let qs = norm(q);
    let kl: f64 = ps
        .iter()
        .zip(&qs)
        .map(|(pi, qi)| {
            if *pi == *qi {
                0.0 // exact-equality fast path keeps identical inputs at 0
            } else {
                pi * (pi / qi).ln()
            }
        })
        .sum();
    // Gibbs' inequality guarantees nonnegativity; clamp the ~1e-17-scale
    // rounding residue so callers can rely on it.
    Ok(kl.max(0.0))
}

/// Ranking direction for rig selection. `Lowest` ranks the candidate whose
/// occlusion distribution best matches the reference first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankOrder {
    #[default]
    Lowest,
    Highest,
}

/// Simulates every candidate rig over the scene, computes its per-marker
/// occlusion-probability distribution, and ranks candidates by KL divergence
/// from `reference`. Returns the top `k` as `(candidate index, divergence)`
/// pairs; ties keep candidate order.
#[allow(clippy::too_many_arguments)]
pub fn select_camera_rigs(
    candidates: &[CameraRig],
    scene: &Scene,
    reference: &OcclusionStats,
    k: usize,
    order: RankOrder,
    min_cameras: usize,
    smoothing: f64,
) -> Result<Vec<(usize, f64)>, SimError> {
    if k > candidates.len() {
        return Err(SimError::NotEnoughCandidates {
            k,
            candidates: candidates.len(),
        });
    }
    let mut ranked = Vec::with_capacity(candidates.len());
    for (i, rig) in candidates.iter().enumerate() {
        let mask = simulate_visibility(scene, rig, min_cameras)?;
        let stats = occlusion_stats(&mask);
        let divergence = kl_divergence(
            &stats.probabilities,
            &reference.probabilities,
            smoothing,
        )?;
        ranked.push((i, divergence));
    }
    ranked.sort_by(|a, b| {
        let ord = a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal);
        match order {
            RankOrder::Lowest => ord.then(a.0.cmp(&b.0)),
            RankOrder::Highest => ord.reverse().then(a.0.cmp(&b.0)),
        }
    });
    ranked.truncate(k);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mask_of(rows: &[&[bool]]) -> VisibilityMask {
        VisibilityMask {
            frames: rows.iter().map(|r| r.to_vec()).collect(),
            hz: 120.0,
        }
    }

    #[test]
    fn all_visible_mask_has_zero_stats() {
        let mask = mask_of(&[&[true, true], &[true, true], &[true, true]]);
        let stats = occlusion_stats(&mask);
        assert_eq!(stats.probabilities, vec![0.0, 0.0]);
        assert!(stats.runs.iter().all(|r| r.is_empty()));
        assert!(stats.run_histogram(0).is_empty());
    }

    #[test]
    fn single_run_is_counted_once() {
        // marker occluded frames 3..7 of 10: probability 0.5, one run of 5
        let frames: Vec<Vec<bool>> = (0..10).map(|f| vec![!(3..8).contains(&f)]).collect();
        let stats = occlusion_stats(&VisibilityMask { frames, hz: 120.0 });
        assert_eq!(stats.probabilities, vec![0.5]);
        assert_eq!(stats.runs[0], vec![5]);
        assert_eq!(stats.run_histogram(0), [(5, 1)].into_iter().collect());
    }

    #[test]
    fn alternating_mask_gives_unit_runs() {
        // occlusion pattern 101010 → three runs of length 1
        let frames: Vec<Vec<bool>> = [false, true, false, true, false, true]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let stats = occlusion_stats(&VisibilityMask { frames, hz: 120.0 });
        assert_eq!(stats.runs[0], vec![1, 1, 1]);
        assert_eq!(stats.run_histogram(0), [(1, 3)].into_iter().collect());
        assert_abs_diff_eq!(stats.mean_run_length(0), 1.0);
    }

    #[test]
    fn stats_are_permutation_equivariant_in_the_marker_axis() {
        let frames = vec![
            vec![true, false, true],
            vec![false, false, true],
            vec![false, true, true],
        ];
        let stats = occlusion_stats(&VisibilityMask { frames: frames.clone(), hz: 60.0 });
        let perm = [2usize, 0, 1];
        let permuted_frames: Vec<Vec<bool>> = frames
            .iter()
            .map(|row| perm.iter().map(|&m| row[m]).collect())
            .collect();
        let permuted = occlusion_stats(&VisibilityMask { frames: permuted_frames, hz: 60.0 });
        for (new_idx, &old_idx) in perm.iter().enumerate() {
            assert_eq!(permuted.probabilities[new_idx], stats.probabilities[old_idx]);
            assert_eq!(permuted.runs[new_idx], stats.runs[old_idx]);
        }
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_abs_diff_eq!(kl_divergence(&p, &p, 1e-9).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kl_closed_form_point_mass_vs_uniform() {
        let d = kl_divergence(&[1.0, 0.0], &[0.5, 0.5], 1e-9).unwrap();
        assert_abs_diff_eq!(d, std::f64::consts::LN_2, epsilon = 1e-6);
    }

    #[test]
    fn kl_rejects_mismatched_support_and_bad_smoothing() {
        assert_eq!(
            kl_divergence(&[1.0], &[0.5, 0.5], 1e-9).unwrap_err(),
            SimError::SupportMismatch { p: 1, q: 2 }
        );
        assert_eq!(
            kl_divergence(&[1.0], &[1.0], 0.0).unwrap_err(),
            SimError::InvalidSmoothing(0.0)
        );
    }

    #[test]
    fn kl_is_nonnegative_under_fuzzing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0cce);
        for _ in 0..2_000 {
            let n = rng.gen_range(1..12);
            let p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let d = kl_divergence(&p, &q, 1e-9).unwrap();
            assert!(d >= 0.0, "negative divergence {d}");
        }
    }
}
