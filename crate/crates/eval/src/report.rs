//! Dataset-level evaluation with occlusion-severity bucketing.
//!
//! Sequences are grouped into the four severity buckets by their per-frame
//! occluded-marker fractions; metrics are averaged per frame within each
//! bucket and overall. Failed frames are counted per bucket and excluded
//! from the averages.

use occluforge_sim::{severity_bucket, SeverityBucket};
use occluforge_solver::TrainingFrame;
use rayon::prelude::*;

use crate::metrics::{joe_frame, jpe_frame};
use crate::pipeline::{FrameSolver, SolveFailure};
use crate::EvalError;

/// One evaluation sequence: corrupted inputs with aligned ground truth.
#[derive(Debug, Clone, Default)]
pub struct EvalSequence {
    pub frames: Vec<TrainingFrame>,
}

impl EvalSequence {
    /// Occluded-marker fraction per frame, the bucketing statistic.
    pub fn occlusion_fractions(&self) -> Vec<f64> {
        self.frames
            .iter()
            .map(|f| {
                let m = f.input.visibility.len().max(1);
                let occluded = f.input.visibility.iter().filter(|v| !**v).count();
                occluded as f64 / m as f64
            })
            .collect()
    }
}

/// Per-bucket accumulated metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BucketMetrics {
    pub sequences: usize,
    /// Frames that produced a solution and entered the averages.
    pub frames: usize,
    /// Frames the solver refused (excluded from averages).
    pub failures: usize,
    pub jpe_cm: Option<f64>,
    pub joe_deg: Option<f64>,
}

/// Full evaluation result for one solver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub solver: String,
    pub fingerprint: String,
    /// Indexed in severity order 5%, 10%, 15%, 20%.
    pub buckets: [BucketMetrics; 4],
    pub overall: BucketMetrics,
    /// Mean per-joint position error across all solved frames, cm.
    pub per_joint_jpe_cm: Vec<f64>,
    /// Mean per-joint geodesic error across all solved frames, degrees.
    pub per_joint_joe_deg: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    frames: usize,
    failures: usize,
    jpe_sum: f64,
    joe_sum: f64,
    joint_dist_sums: Vec<f64>,
    joint_angle_sums: Vec<f64>,
}

impl Accumulator {
    fn merge(&mut self, other: &Accumulator) {
        self.frames += other.frames;
        self.failures += other.failures;
        self.jpe_sum += other.jpe_sum;
        self.joe_sum += other.joe_sum;
        if self.joint_dist_sums.len() < other.joint_dist_sums.len() {
            self.joint_dist_sums.resize(other.joint_dist_sums.len(), 0.0);
            self.joint_angle_sums.resize(other.joint_angle_sums.len(), 0.0);
        }
        for (dst, src) in self.joint_dist_sums.iter_mut().zip(&other.joint_dist_sums) {
            *dst += src;
        }
        for (dst, src) in self.joint_angle_sums.iter_mut().zip(&other.joint_angle_sums) {
            *dst += src;
        }
    }

    fn metrics(&self, sequences: usize) -> BucketMetrics {
        let (jpe_cm, joe_deg) = if self.frames > 0 {
            (
                Some(self.jpe_sum / self.frames as f64),
                Some(self.joe_sum / self.frames as f64),
            )
        } else {
            (None, None)
        };
        BucketMetrics {
            sequences,
            frames: self.frames,
            failures: self.failures,
            jpe_cm,
            joe_deg,
        }
    }
}

fn bucket_slot(bucket: SeverityBucket) -> usize {
    SeverityBucket::ALL
        .iter()
        .position(|b| *b == bucket)
        .expect("bucket is one of the four severities")
}

/// Runs `solver` over every frame of every sequence and aggregates JPE/JOE
/// per severity bucket. Parallel over sequences; reduction order is fixed,
/// so the report is deterministic for a deterministic solver.
pub fn evaluate(solver: &dyn FrameSolver, sequences: &[EvalSequence]) -> Result<EvalReport, EvalError> {
    if sequences.is_empty() || sequences.iter().all(|s| s.frames.is_empty()) {
        return Err(EvalError::EmptyDataset);
    }

    let per_sequence: Vec<(usize, Accumulator)> = sequences
        .par_iter()
        .map(|sequence| {
            let slot = bucket_slot(severity_bucket(&sequence.occlusion_fractions()));
            let mut acc = Accumulator::default();
            for frame in &sequence.frames {
                match solver.solve(frame) {
                    Ok(solution) => {
                        let jpe = jpe_frame(&solution.joints, &frame.gt_joints)?;
                        let joe = joe_frame(&solution.rotations, &frame.gt_rotations)?;
                        acc.frames += 1;
                        acc.jpe_sum += jpe;
                        acc.joe_sum += joe;
                        if acc.joint_dist_sums.is_empty() {
                            acc.joint_dist_sums = vec![0.0; frame.gt_joints.len()];
                            acc.joint_angle_sums = vec![0.0; frame.gt_joints.len()];
                        }
                        for (j, (p, g)) in
                            solution.joints.iter().zip(&frame.gt_joints).enumerate()
                        {
                            acc.joint_dist_sums[j] += (p - g).norm() * 100.0;
                        }
                        for (j, (p, g)) in
                            solution.rotations.iter().zip(&frame.gt_rotations).enumerate()
                        {
                            acc.joint_angle_sums[j] +=
                                occluforge_core::geodesic_angle_deg(p, g);
                        }
                    }
                    Err(SolveFailure::AlignmentUnderdetermined | SolveFailure::Other(_)) => {
                        acc.failures += 1;
                    }
                }
            }
            Ok((slot, acc))
        })
        .collect::<Result<_, EvalError>>()?;

    let mut bucket_accs: [Accumulator; 4] = Default::default();
    let mut bucket_sequences = [0usize; 4];
    let mut overall = Accumulator::default();
    for (slot, acc) in &per_sequence {
        bucket_accs[*slot].merge(acc);
        bucket_sequences[*slot] += 1;
        overall.merge(acc);
    }

    let buckets = [
        bucket_accs[0].metrics(bucket_sequences[0]),
        bucket_accs[1].metrics(bucket_sequences[1]),
        bucket_accs[2].metrics(bucket_sequences[2]),
        bucket_accs[3].metrics(bucket_sequences[3]),
    ];
    let per_joint_jpe_cm = if overall.frames > 0 {
        overall
            .joint_dist_sums
            .iter()
            .map(|s| s / overall.frames as f64)
            .collect()
    } else {
        Vec::new()
    };
    let per_joint_joe_deg = if overall.frames > 0 {
        overall
            .joint_angle_sums
            .iter()
            .map(|s| s / overall.frames as f64)
            .collect()
    } else {
        Vec::new()
    };

    let report = EvalReport {
        solver: solver.name().to_string(),
        fingerprint: solver.fingerprint(),
        buckets,
        overall: overall.metrics(sequences.len()),
        per_joint_jpe_cm,
        per_joint_joe_deg,
    };
    report.self_check()?;
    Ok(report)
}

fn quote_csv(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn fmt_float(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

impl EvalReport {
    /// Frame-weighted merge of the buckets must reproduce the overall
    /// numbers, and counts must be consistent.
    pub fn self_check(&self) -> Result<(), EvalError> {
        let frames: usize = self.buckets.iter().map(|b| b.frames).sum();
        let failures: usize = self.buckets.iter().map(|b| b.failures).sum();
        if frames != self.overall.frames || failures != self.overall.failures {
            return Err(EvalError::Inconsistent(
                "bucket frame/failure counts do not sum to the overall counts",
            ));
        }
        if frames == 0 {
            return Ok(());
        }
        let merge = |pick: fn(&BucketMetrics) -> Option<f64>| -> f64 {
            self.buckets
                .iter()
                .filter_map(|b| pick(b).map(|v| v * b.frames as f64))
                .sum::<f64>()
                / frames as f64
        };
        let merged_jpe = merge(|b| b.jpe_cm);
        let merged_joe = merge(|b| b.joe_deg);
        let overall_jpe = self.overall.jpe_cm.unwrap_or(0.0);
        let overall_joe = self.overall.joe_deg.unwrap_or(0.0);
        if (merged_jpe - overall_jpe).abs() > 1e-9 * overall_jpe.abs().max(1.0)
            || (merged_joe - overall_joe).abs() > 1e-9 * overall_joe.abs().max(1.0)
        {
            return Err(EvalError::Inconsistent(
                "frame-weighted bucket merge disagrees with the overall metrics",
            ));
        }
        Ok(())
    }

    /// RFC-4180 CSV, one row per bucket plus an overall row; floats carry 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("solver,bucket,sequences,frames,failures,jpe_cm,joe_deg\r\n");
        let solver = quote_csv(&self.solver);
        for (bucket, metrics) in SeverityBucket::ALL.iter().zip(&self.buckets) {
            out.push_str(&format!(
                "{},{}%,{},{},{},{},{}\r\n",
                solver,
                bucket.percent(),
                metrics.sequences,
                metrics.frames,
                metrics.failures,
                fmt_float(metrics.jpe_cm),
                fmt_float(metrics.joe_deg),
            ));
        }
        out.push_str(&format!(
            "{},overall,{},{},{},{},{}\r\n",
            solver,
            self.overall.sequences,
            self.overall.frames,
            self.overall.failures,
            fmt_float(self.overall.jpe_cm),
            fmt_float(self.overall.joe_deg),
        ));
        out
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "solver: {} ({})", self.solver, self.fingerprint)?;
        writeln!(
            f,
            "{:>8} {:>10} {:>8} {:>9} {:>12} {:>12}",
            "bucket", "sequences", "frames", "failures", "jpe_cm", "joe_deg"
        )?;
        let row = |f: &mut std::fmt::Formatter<'_>,
                   label: &str,
                   m: &BucketMetrics|
         -> std::fmt::Result {
            writeln!(
                f,
                "{:>8} {:>10} {:>8} {:>9} {:>12} {:>12}",
                label,
                m.sequences,
                m.frames,
                m.failures,
                m.jpe_cm.map_or("-".into(), |v| format!("{v:.4}")),
                m.joe_deg.map_or("-".into(), |v| format!("{v:.4}")),
            )
        };
        for (bucket, metrics) in SeverityBucket::ALL.iter().zip(&self.buckets) {
            row(f, &format!("{}%", bucket.percent()), metrics)?;
        }
        row(f, "overall", &self.overall)
    }
}
