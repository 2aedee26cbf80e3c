//! Random marker corruption: dropout plus Gaussian position noise, with the
//! ground-truth record needed to supervise reconstruction.

use crate::SimError;
use occluforge_core::{MarkerFrame, MarkerSequence, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// What the corruption pass did to each marker-frame, for loss computation:
/// which slots it occluded and the offset it injected into shifted slots.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRecord {
    /// `true` where the pass forced the marker occluded.
    pub occluded: Vec<Vec<bool>>,
    /// Injected offset; zero where no shift was applied.
    pub shifts: Vec<Vec<Vec3>>,
}

/// Independently per frame and marker: with probability `occl_prob` the
/// marker is marked occluded (position zeroed); otherwise with probability
/// `shift_prob` a zero-mean Gaussian offset with per-axis std `shift_sigma`
/// is added. Markers already occluded in the input stay occluded; decisions
/// are still drawn for them so the random stream depends only on the grid
/// shape and seed. Deterministic for a fixed seed.
pub fn corrupt(
    sequence: &MarkerSequence,
    occl_prob: f64,
    shift_prob: f64,
    shift_sigma: f64,
    seed: u64,
) -> Result<(MarkerSequence, CorruptionRecord), SimError> {
    for p in [occl_prob, shift_prob] {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::InvalidProbability(p));
        }
    }
    let normal = Normal::new(0.0, shift_sigma.max(0.0))
        .expect("non-negative sigma is always a valid Normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(sequence.frames.len());
    let mut occluded = Vec::with_capacity(sequence.frames.len());
    let mut shifts = Vec::with_capacity(sequence.frames.len());
    for frame in &sequence.frames {
        let mut out = frame.clone();
        let mut occ_row = vec![false; frame.positions.len()];
        let mut shift_row = vec![Vec3::zeros(); frame.positions.len()];
        for m in 0..frame.positions.len() {
            let drop: f64 = rng.gen();
            if drop < occl_prob {
                occ_row[m] = true;
                out.visibility[m] = false;
                out.positions[m] = Vec3::zeros();
            } else if rng.gen::<f64>() < shift_prob {
                let offset = Vec3::new(
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                );
                if frame.visibility[m] {
                    shift_row[m] = offset;
                    out.positions[m] += offset;
                }
            }
            if !frame.visibility[m] {
                // input occlusion is preserved regardless of the draw
                out.visibility[m] = false;
                out.positions[m] = Vec3::zeros();
            }
        }
        frames.push(MarkerFrame {
            positions: out.positions,
            visibility: out.visibility,
        });
        occluded.push(occ_row);
        shifts.push(shift_row);
    }
    Ok((
        MarkerSequence {
            frames,
            hz: sequence.hz,
        },
        CorruptionRecord { occluded, shifts },
    ))
}
