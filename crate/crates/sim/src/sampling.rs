//! Dataset rebalancing: oversampling of heavily occluded sequences and
//! severity bucketing.

use crate::SimError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hard cap on how many duplicates oversampling may add per qualifying
/// sequence before giving up.
const MAX_DUPLICATION_FACTOR: usize = 10_000;

/// Duplicates (with replacement, seeded) the sequences whose mean per-frame
/// occluded fraction is at least `occlusion_threshold`, until they make up
/// at least `target_ratio` of the dataset. Input is the per-sequence mean
/// occlusion fraction; output is the resampled index multiset: all original
/// indices in order, then the appended duplicates. Originals are never
/// removed.
pub fn oversample(
    mean_occlusion: &[f64],
    occlusion_threshold: f64,
    target_ratio: f64,
    seed: u64,
) -> Result<Vec<usize>, SimError> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(SimError::InvalidTargetRatio(target_ratio));
    }
    let qualifying: Vec<usize> = (0..mean_occlusion.len())
        .filter(|&i| mean_occlusion[i] >= occlusion_threshold)
        .collect();
    if qualifying.is_empty() {
        return Err(SimError::NothingToOversample);
    }
    let total = mean_occlusion.len();
    let heavy = qualifying.len();
    let mut out: Vec<usize> = (0..total).collect();
    if heavy as f64 / total as f64 >= target_ratio {
        return Ok(out); // already balanced
    }
    // Need (heavy + d) / (total + d) ≥ target_ratio.
    let needed = ((target_ratio * total as f64 - heavy as f64) / (1.0 - target_ratio)).ceil()
        as usize;
    if needed > heavy * MAX_DUPLICATION_FACTOR {
        return Err(SimError::OversampleCapExceeded {
            needed,
            qualifying: heavy,
            cap: MAX_DUPLICATION_FACTOR,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..needed {
        out.push(qualifying[rng.gen_range(0..heavy)]);
    }
    Ok(out)
}

/// Occlusion-severity thresholds as fractions of markers occluded per frame.
pub const SEVERITY_THRESHOLDS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];

/// The four severity groups. A sequence belongs to the largest threshold B
/// such that more than half of its frames have an occluded-marker fraction
/// exceeding B; sequences exceeding none take the 5% floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeverityBucket {
    P5,
    P10,
    P15,
    P20,
}

impl SeverityBucket {
    pub fn percent(self) -> u8 {
        match self {
            SeverityBucket::P5 => 5,
            SeverityBucket::P10 => 10,
            SeverityBucket::P15 => 15,
            SeverityBucket::P20 => 20,
        }
    }

    pub const ALL: [SeverityBucket; 4] = [
        SeverityBucket::P5,
        SeverityBucket::P10,
        SeverityBucket::P15,
        SeverityBucket::P20,
    ];

    fn threshold(self) -> f64 {
        match self {
            SeverityBucket::P5 => 0.05,
            SeverityBucket::P10 => 0.10,
            SeverityBucket::P15 => 0.15,
            SeverityBucket::P20 => 0.20,
        }
    }
}

impl std::fmt::Display for SeverityBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}%", self.percent())
    }
}

/// Bucket for one sequence given its per-frame occluded-marker fractions.
pub fn severity_bucket(frame_fractions: &[f64]) -> SeverityBucket {
    let n = frame_fractions.len();
    for bucket in SeverityBucket::ALL.iter().rev() {
        let exceeding = frame_fractions
            .iter()
            .filter(|&&f| f > bucket.threshold())
            .count();
        if 2 * exceeding > n {
            return *bucket;
        }
    }
    SeverityBucket::P5
}

/// Groups sequence indices by severity bucket, ordered 5/10/15/20%.
pub fn bucket_by_occlusion(per_sequence_fractions: &[Vec<f64>]) -> [Vec<usize>; 4] {
    let mut groups: [Vec<usize>; 4] = Default::default();
    for (i, fracs) in per_sequence_fractions.iter().enumerate() {
        let bucket = severity_bucket(fracs);
        let slot = SeverityBucket::ALL.iter().position(|b| *b == bucket).unwrap();
        groups[slot].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_dataset_is_returned_unchanged() {
        let out = oversample(&[0.5, 0.5, 0.0], 0.3, 0.5, 0).unwrap();
        assert_eq!(out, vec![0, 1, 2]);
    }

    #[test]
    fn one_heavy_among_nine_light_reaches_half() {
        let mut occ = vec![0.01; 9];
        occ.push(0.4);
        let out = oversample(&occ, 0.3, 0.5, 0).unwrap();
        // 8 duplicates of sequence 9 → 9 heavy copies of 18 total
        assert_eq!(out.len(), 18);
        assert_eq!(out[..10], (0..10).collect::<Vec<_>>()[..]);
        assert!(out[10..].iter().all(|&i| i == 9));
        let heavy = out.iter().filter(|&&i| occ[i] >= 0.3).count();
        assert_eq!(heavy, 9);
    }

    #[test]
    fn extreme_ratio_terminates_within_the_cap() {
        let mut occ = vec![0.01; 9];
        occ.push(0.4);
        let out = oversample(&occ, 0.3, 0.999, 0).unwrap();
        let heavy = out.iter().filter(|&&i| occ[i] >= 0.3).count();
        assert!(heavy as f64 / out.len() as f64 >= 0.999);
        assert!(heavy <= 1 + MAX_DUPLICATION_FACTOR);
    }

    #[test]
    fn cap_overflow_is_an_error() {
        let mut occ = vec![0.01; 100_000];
        occ.push(0.4);
        match oversample(&occ, 0.3, 0.5, 0) {
            Err(SimError::OversampleCapExceeded { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn nothing_qualifying_is_an_error() {
        assert_eq!(
            oversample(&[0.0, 0.1], 0.5, 0.5, 0).unwrap_err(),
            SimError::NothingToOversample
        );
    }

    #[test]
    fn oversampling_is_deterministic_per_seed() {
        let occ = [0.01, 0.5, 0.6, 0.01, 0.01, 0.01, 0.01];
        let a = oversample(&occ, 0.3, 0.7, 11).unwrap();
        let b = oversample(&occ, 0.3, 0.7, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bucket_rule_matches_hand_cases() {
        // 60% of frames at 22% occlusion → 20% bucket
        let mut fracs = vec![0.22; 60];
        fracs.extend(vec![0.0; 40]);
        assert_eq!(severity_bucket(&fracs), SeverityBucket::P20);
        // all frames at 0% → 5% floor
        assert_eq!(severity_bucket(&vec![0.0; 50]), SeverityBucket::P5);
        // 51% of frames at 12% → 10% bucket
        let mut fracs = vec![0.12; 51];
        fracs.extend(vec![0.0; 49]);
        assert_eq!(severity_bucket(&fracs), SeverityBucket::P10);
        // exactly half exceeding does not qualify ("more than half")
        let mut fracs = vec![0.22; 50];
        fracs.extend(vec![0.0; 50]);
        assert_eq!(severity_bucket(&fracs), SeverityBucket::P5);
    }

    #[test]
    fn grouping_covers_every_sequence_once() {
        let seqs = vec![
            vec![0.0; 10],
            vec![0.22; 10],
            vec![0.12; 10],
            vec![0.17; 10],
        ];
        let groups = bucket_by_occlusion(&seqs);
        assert_eq!(groups[0], vec![0]);
        assert_eq!(groups[1], vec![2]);
        assert_eq!(groups[2], vec![3]);
        assert_eq!(groups[3], vec![1]);
        let total: usize = groups.iter().map(|g| g.len()).sum();
        assert_eq!(total, seqs.len());
    }
}
