//! Two-stage training: the position solver learns first on the position
//! loss; the rotation solver then learns on the (frozen) position solver's
//! aligned outputs. A merged single-network variant trains both objectives
//! at once with alignment done as preprocessing, which fails on frames with
//! too few visible key markers — those frames are counted and skipped.
//!
//! Determinism contract: with `deterministic = true` the whole run is
//! single-threaded and bitwise reproducible under a fixed seed. Otherwise
//! gradient accumulation is data-parallel over fixed-size chunks reduced in
//! chunk order — statistically equivalent, not bitwise.

use crate::graph::Graph;
use crate::losses::{position_loss_on, rotation_loss_on, LossWeights};
use crate::params::Parameters;
use crate::position::{frame_coords, PositionSolver};
use crate::rotation::{stack_coords, RotationSolver};
use crate::SolverError;
use ndarray::Array2;
use occluforge_core::{align_to_tpose, centralize, MarkerFrame, MarkerLayout, Rotation, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One supervised frame: the corrupted capture plus clean ground truth in
/// the same world coordinates. `gt_rotations` are local joint rotations
/// with the root entry holding the root's world orientation.
#[derive(Debug, Clone)]
pub struct TrainingFrame {
    pub input: MarkerFrame,
    pub gt_markers: Vec<Vec3>,
    pub gt_joints: Vec<Vec3>,
    pub gt_rotations: Vec<Rotation>,
}

/// Adam hyperparameters. `clip_norm ≤ 0` disables gradient clipping.
/// `final_lr_fraction` linearly anneals the learning rate from its initial
/// value to `learning_rate × final_lr_fraction` at the last step; 1.0 keeps
/// it constant. Annealing matters here because the position objective is a
/// sum of norms whose gradient magnitude does not vanish at the optimum, so
/// constant-step Adam stalls at a loss floor proportional to the step size.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
    pub final_lr_fraction: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 1.0,
            final_lr_fraction: 1.0,
        }
    }
}

/// Training-run parameters shared by all stages.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Single-threaded, bitwise-reproducible execution.
    pub deterministic: bool,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    /// Loss-curve row cadence (a row is always emitted at the last step).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            batch_size: 256,
            seed: 0,
            deterministic: false,
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            log_every: 10,
        }
    }
}

/// One loss-curve sample. Position stages leave `l_rot` at 0 and the
/// rotation stage leaves the position terms at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCurveRow {
    pub step: usize,
    pub l_mocc: f64,
    pub l_mshift: f64,
    pub l_j: f64,
    pub l_p: f64,
    pub l_rot: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rows: Vec<LossCurveRow>,
    /// Batch-mean objective at the final step.
    pub final_loss: f64,
    pub steps: usize,
    /// Frames dropped because preprocessing alignment was underdetermined
    /// (merged stage only).
    pub alignment_failures: usize,
}

/// Adam with bias correction and optional global-norm clipping.
pub struct Adam {
    config: AdamConfig,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(params: &Parameters, config: AdamConfig) -> Self {
        Adam {
            config,
            m: params.zeroed_like(),
            v: params.zeroed_like(),
            t: 0,
        }
    }

    /// Applies one update from already-averaged gradients.
    pub fn step(&mut self, params: &mut Parameters, grads: &[Array2<f64>]) {
        self.step_scaled(params, grads, 1.0);
    }

    /// As [`step`](Self::step) with the learning rate multiplied by
    /// `lr_scale` (annealing hook).
    pub fn step_scaled(&mut self, params: &mut Parameters, grads: &[Array2<f64>], lr_scale: f64) {
        let norm: f64 = grads
            .iter()
            .map(|g| g.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let clip_scale = if self.config.clip_norm > 0.0 && norm > self.config.clip_norm {
            self.config.clip_norm / norm
        } else {
            1.0
        };
        self.t += 1;
        let bc1 = 1.0 - self.config.beta1.powi(self.t);
        let bc2 = 1.0 - self.config.beta2.powi(self.t);
        let lr = self.config.learning_rate * lr_scale;
        let ids: Vec<_> = params.ids().collect();
        for (i, id) in ids.into_iter().enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            let target = params.get_mut(id);
            for ((pv, mv), (vv, gv)) in target
                .iter_mut()
                .zip(m.iter_mut())
                .zip(v.iter_mut().zip(grads[i].iter()))
            {
                let g = gv * clip_scale;
                *mv = self.config.beta1 * *mv + (1.0 - self.config.beta1) * g;
                *vv = self.config.beta2 * *vv + (1.0 - self.config.beta2) * g * g;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + self.config.epsilon);
            }
        }
    }

    /// Annealing factor for step `step` of `steps` (both 1-based): geometric
    /// interpolation from 1 down to `final_lr_fraction`. Geometric rather
    /// than linear because the loss floor of a norm objective tracks the
    /// current step size — the run needs to *spend time* at small rates, not
    /// merely end on one.
    pub fn lr_scale(config: &AdamConfig, step: usize, steps: usize) -> f64 {
        if steps <= 1 || config.final_lr_fraction >= 1.0 {
            return 1.0;
        }
        let progress = (step - 1) as f64 / (steps - 1) as f64;
        config.final_lr_fraction.max(f64::MIN_POSITIVE).powf(progress)
    }
}

/// Batch-summed loss terms.
#[derive(Debug, Clone, Copy, Default)]
struct Terms {
    l_mocc: f64,
    l_mshift: f64,
    l_j: f64,
    l_p: f64,
    l_rot: f64,
}

impl Terms {
    fn add(&mut self, o: &Terms) {
        self.l_mocc += o.l_mocc;
        self.l_mshift += o.l_mshift;
        self.l_j += o.l_j;
        self.l_p += o.l_p;
        self.l_rot += o.l_rot;
    }

    fn scaled(mut self, s: f64) -> Terms {
        self.l_mocc *= s;
        self.l_mshift *= s;
        self.l_j *= s;
        self.l_p *= s;
        self.l_rot *= s;
        self
    }

    fn objective(&self) -> f64 {
        self.l_p + self.l_rot
    }

    fn row(&self, step: usize) -> LossCurveRow {
        LossCurveRow {
            step,
            l_mocc: self.l_mocc,
            l_mshift: self.l_mshift,
            l_j: self.l_j,
            l_p: self.l_p,
            l_rot: self.l_rot,
        }
    }
}

/// Minibatch draw with replacement; a batch at least as large as the dataset
/// degenerates to one exact full-batch sweep (no resampling noise).
fn sample_indices<R: Rng>(rng: &mut R, n: usize, batch: usize) -> Vec<usize> {
    if batch >= n {
        return (0..n).collect();
    }
    (0..batch.max(1)).map(|_| rng.gen_range(0..n)).collect()
}

/// Sums per-frame gradients into one sink. Deterministic mode walks the
/// batch in order on one thread; parallel mode reduces fixed chunks in
/// chunk order.
fn accumulate_batch<F>(
    indices: &[usize],
    template: &Parameters,
    deterministic: bool,
    per_frame: F,
) -> Result<(Vec<Array2<f64>>, Terms), SolverError>
where
    F: Fn(usize, &mut [Array2<f64>]) -> Result<Terms, SolverError> + Sync,
{
    if deterministic {
        let mut sink = template.zeroed_like();
        let mut terms = Terms::default();
        for &i in indices {
            let t = per_frame(i, &mut sink)?;
            terms.add(&t);
        }
        return Ok((sink, terms));
    }
    let threads = rayon::current_num_threads().max(1);
    let chunk = indices.len().div_ceil(threads).max(1);
    let parts: Result<Vec<(Vec<Array2<f64>>, Terms)>, SolverError> = indices
        .par_chunks(chunk)
        .map(|ix| {
            let mut sink = template.zeroed_like();
            let mut terms = Terms::default();
            for &i in ix {
                let t = per_frame(i, &mut sink)?;
                terms.add(&t);
            }
            Ok((sink, terms))
        })
        .collect();
    let mut sink = template.zeroed_like();
    let mut terms = Terms::default();
    for (part_sink, part_terms) in parts? {
        for (dst, src) in sink.iter_mut().zip(&part_sink) {
            *dst += src;
        }
        terms.add(&part_terms);
    }
    Ok((sink, terms))
}

fn vec3s_to_array(points: &[Vec3], offset: Vec3) -> Array2<f64> {
    let mut a = Array2::zeros((points.len(), 3));
    for (i, p) in points.iter().enumerate() {
        a[(i, 0)] = p.x - offset.x;
        a[(i, 1)] = p.y - offset.y;
        a[(i, 2)] = p.z - offset.z;
    }
    a
}

struct PositionSample {
    coords: Array2<f64>,
    visibility: Vec<bool>,
    occluded: Vec<bool>,
    gt_markers: Array2<f64>,
    gt_joints: Array2<f64>,
}

fn prepare_position_sample(frame: &TrainingFrame) -> Result<PositionSample, SolverError> {
    let (centered, centroid) = centralize(&frame.input)?;
    let occluded: Vec<bool> = frame.input.visibility.iter().map(|v| !v).collect();
    Ok(PositionSample {
        coords: frame_coords(&centered),
        visibility: centered.visibility.clone(),
        occluded,
        gt_markers: vec3s_to_array(&frame.gt_markers, centroid),
        gt_joints: vec3s_to_array(&frame.gt_joints, centroid),
    })
}

/// Stage 1: trains the position solver on the weighted position loss.
/// Ground truth is expressed in the input frame's centralized coordinates.
pub fn train_position(
    solver: &mut PositionSolver,
    frames: &[TrainingFrame],
    config: &TrainConfig,
) -> Result<TrainReport, SolverError> {
    if frames.is_empty() {
        return Err(SolverError::ContractViolation("no training frames"));
    }
    let samples: Vec<PositionSample> = frames
        .iter()
        .map(prepare_position_sample)
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(solver.params(), config.adam);
    let mut rows = Vec::new();
    let mut final_loss = f64::NAN;

    for step in 1..=config.steps {
        let indices = sample_indices(&mut rng, samples.len(), config.batch_size);
        let weights = config.weights;
        let solver_ref: &PositionSolver = solver;
        let samples_ref = &samples;
        let per_frame = move |i: usize, sink: &mut [Array2<f64>]| {
            let s = &samples_ref[i];
            let mut g = Graph::new();
            let fwd = solver_ref.forward_on(&mut g, &s.coords, &s.visibility)?;
            let loss = position_loss_on(
                &mut g,
                fwd.markers,
                fwd.joints,
                &s.gt_markers,
                &s.gt_joints,
                &s.occluded,
                weights,
            )?;
            let grads = g.backward(loss.total);
            grads.accumulate_params(sink);
            Ok(Terms {
                l_mocc: g.value(loss.marker_occluded)[(0, 0)],
                l_mshift: g.value(loss.marker_shifted)[(0, 0)],
                l_j: g.value(loss.joint)[(0, 0)],
                l_p: g.value(loss.total)[(0, 0)],
                l_rot: 0.0,
            })
        };
        let (mut sink, summed) =
            accumulate_batch(&indices, solver.params(), config.deterministic, per_frame)?;
        let terms = summed.scaled(1.0 / indices.len() as f64);
        if !terms.objective().is_finite() {
            return Err(SolverError::Diverged { step, loss: terms.objective() });
        }
        for g in &mut sink {
            *g /= indices.len() as f64;
        }
        let scale = Adam::lr_scale(&config.adam, step, config.steps);
        adam.step_scaled(solver.params_mut(), &sink, scale);
        final_loss = terms.objective();
        if step % config.log_every.max(1) == 0 || step == config.steps {
            rows.push(terms.row(step));
        }
    }
    Ok(TrainReport {
        rows,
        final_loss,
        steps: config.steps,
        alignment_failures: 0,
    })
}

struct RotationSample {
    coords: Array2<f64>,
    targets: Vec<Rotation>,
}

/// Runs the frozen position solver, re-anchors its output in world space,
/// aligns to the reference pose, and expresses the rotation targets in the
/// aligned frame (alignment rotation folded into the root target).
fn prepare_rotation_sample(
    position: &PositionSolver,
    frame: &TrainingFrame,
    layout: &MarkerLayout,
    reference: &[Vec3],
) -> Result<RotationSample, SolverError> {
    let (centered, centroid) = centralize(&frame.input)?;
    let out = position.forward(&centered)?;
    let world_markers: Vec<Vec3> = out.markers.iter().map(|p| p + centroid).collect();
    let world_joints: Vec<Vec3> = out.joints.iter().map(|p| p + centroid).collect();
    let completed = MarkerFrame::fully_visible(world_markers);
    let (aligned, transform) = align_to_tpose(&completed, layout, reference)?;
    let aligned_joints: Vec<Vec3> = world_joints.iter().map(|p| transform.apply(p)).collect();
    let mut targets = frame.gt_rotations.clone();
    targets[0] = transform.rotation * targets[0];
    Ok(RotationSample {
        coords: stack_coords(&aligned.positions, &aligned_joints),
        targets,
    })
}

/// Stage 2: trains the rotation solver on the frozen position solver's
/// aligned outputs. No gradient flows into the position solver.
pub fn train_rotation(
    rotation: &mut RotationSolver,
    position: &PositionSolver,
    frames: &[TrainingFrame],
    layout: &MarkerLayout,
    reference: &[Vec3],
    config: &TrainConfig,
) -> Result<TrainReport, SolverError> {
    if frames.is_empty() {
        return Err(SolverError::ContractViolation("no training frames"));
    }
    let joints = rotation.config().joints;
    for frame in frames {
        if frame.gt_rotations.len() != joints {
            return Err(SolverError::ShapeMismatch {
                expected: format!("{joints} ground-truth rotations"),
                got: format!("{}", frame.gt_rotations.len()),
            });
        }
    }
    // The position solver is frozen, so each frame's aligned inputs and
    // targets are fixed for the whole stage; compute them once.
    let samples: Vec<RotationSample> = if config.deterministic {
        frames
            .iter()
            .map(|f| prepare_rotation_sample(position, f, layout, reference))
            .collect::<Result<_, _>>()?
    } else {
        frames
            .par_iter()
            .map(|f| prepare_rotation_sample(position, f, layout, reference))
            .collect::<Result<_, _>>()?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(rotation.params(), config.adam);
    let mut rows = Vec::new();
    let mut final_loss = f64::NAN;

    for step in 1..=config.steps {
        let indices = sample_indices(&mut rng, samples.len(), config.batch_size);
        let rotation_ref: &RotationSolver = rotation;
        let samples_ref = &samples;
        let per_frame = move |i: usize, sink: &mut [Array2<f64>]| {
            let s = &samples_ref[i];
            let mut g = Graph::new();
            let head = rotation_ref.forward_on(&mut g, &s.coords)?;
            let loss = rotation_loss_on(&mut g, head, &s.targets)?;
            let grads = g.backward(loss);
            grads.accumulate_params(sink);
            Ok(Terms {
                l_rot: g.value(loss)[(0, 0)],
                ..Terms::default()
            })
        };
        let (mut sink, summed) =
            accumulate_batch(&indices, rotation.params(), config.deterministic, per_frame)?;
        let terms = summed.scaled(1.0 / indices.len() as f64);
        if !terms.objective().is_finite() {
            return Err(SolverError::Diverged { step, loss: terms.objective() });
        }
        for g in &mut sink {
            *g /= indices.len() as f64;
        }
        let scale = Adam::lr_scale(&config.adam, step, config.steps);
        adam.step_scaled(rotation.params_mut(), &sink, scale);
        final_loss = terms.objective();
        if step % config.log_every.max(1) == 0 || step == config.steps {
            rows.push(terms.row(step));
        }
    }
    Ok(TrainReport {
        rows,
        final_loss,
        steps: config.steps,
        alignment_failures: 0,
    })
}

struct MergedSample {
    coords: Array2<f64>,
    visibility: Vec<bool>,
    occluded: Vec<bool>,
    gt_markers: Array2<f64>,
    gt_joints: Array2<f64>,
    targets: Vec<Rotation>,
}

fn prepare_merged_sample(
    frame: &TrainingFrame,
    layout: &MarkerLayout,
    reference: &[Vec3],
) -> Result<Option<MergedSample>, SolverError> {
    // Alignment happens before the network here, from visible key markers
    // alone — too few of them is a hard per-frame failure.
    let (aligned, transform) = match align_to_tpose(&frame.input, layout, reference) {
        Ok(pair) => pair,
        Err(e) if e.is_underdetermined() => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let (centered, centroid) = centralize(&aligned)?;
    let occluded: Vec<bool> = frame.input.visibility.iter().map(|v| !v).collect();
    let gt_markers: Vec<Vec3> = frame.gt_markers.iter().map(|p| transform.apply(p)).collect();
    let gt_joints: Vec<Vec3> = frame.gt_joints.iter().map(|p| transform.apply(p)).collect();
    let mut targets = frame.gt_rotations.clone();
    targets[0] = transform.rotation * targets[0];
    Ok(Some(MergedSample {
        coords: frame_coords(&centered),
        visibility: centered.visibility.clone(),
        occluded,
        gt_markers: vec3s_to_array(&gt_markers, centroid),
        gt_joints: vec3s_to_array(&gt_joints, centroid),
        targets,
    }))
}

/// Non-decoupled ablation: one network learns positions and rotations
/// together, with rigid alignment done as input preprocessing. Frames whose
/// alignment is underdetermined are skipped and counted.
pub fn train_merged(
    solver: &mut PositionSolver,
    frames: &[TrainingFrame],
    layout: &MarkerLayout,
    reference: &[Vec3],
    config: &TrainConfig,
) -> Result<TrainReport, SolverError> {
    if !solver.config().rotation_head {
        return Err(SolverError::ContractViolation(
            "merged training requires a model with a rotation head",
        ));
    }
    if frames.is_empty() {
        return Err(SolverError::ContractViolation("no training frames"));
    }
    let mut samples = Vec::new();
    let mut alignment_failures = 0usize;
    for frame in frames {
        match prepare_merged_sample(frame, layout, reference)? {
            Some(s) => samples.push(s),
            None => alignment_failures += 1,
        }
    }
    if samples.is_empty() {
        return Err(SolverError::ContractViolation(
            "every frame failed alignment preprocessing",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(solver.params(), config.adam);
    let mut rows = Vec::new();
    let mut final_loss = f64::NAN;

    for step in 1..=config.steps {
        let indices = sample_indices(&mut rng, samples.len(), config.batch_size);
        let weights = config.weights;
        let solver_ref: &PositionSolver = solver;
        let samples_ref = &samples;
        let per_frame = move |i: usize, sink: &mut [Array2<f64>]| {
            let s = &samples_ref[i];
            let mut g = Graph::new();
            let fwd = solver_ref.forward_on(&mut g, &s.coords, &s.visibility)?;
            let head = fwd.rotations6d.expect("rotation head checked above");
            let position = position_loss_on(
                &mut g,
                fwd.markers,
                fwd.joints,
                &s.gt_markers,
                &s.gt_joints,
                &s.occluded,
                weights,
            )?;
            let rot = rotation_loss_on(&mut g, head, &s.targets)?;
            let total = g.add(position.total, rot);
            let grads = g.backward(total);
            grads.accumulate_params(sink);
            Ok(Terms {
                l_mocc: g.value(position.marker_occluded)[(0, 0)],
                l_mshift: g.value(position.marker_shifted)[(0, 0)],
                l_j: g.value(position.joint)[(0, 0)],
                l_p: g.value(position.total)[(0, 0)],
                l_rot: g.value(rot)[(0, 0)],
            })
        };
        let (mut sink, summed) =
            accumulate_batch(&indices, solver.params(), config.deterministic, per_frame)?;
        let terms = summed.scaled(1.0 / indices.len() as f64);
        if !terms.objective().is_finite() {
            return Err(SolverError::Diverged { step, loss: terms.objective() });
        }
        for g in &mut sink {
            *g /= indices.len() as f64;
        }
        let scale = Adam::lr_scale(&config.adam, step, config.steps);
        adam.step_scaled(solver.params_mut(), &sink, scale);
        final_loss = terms.objective();
        if step % config.log_every.max(1) == 0 || step == config.steps {
            rows.push(terms.row(step));
        }
    }
    Ok(TrainReport {
        rows,
        final_loss,
        steps: config.steps,
        alignment_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::position::PositionModelConfig;

    fn tiny_config() -> PositionModelConfig {
        PositionModelConfig {
            width: 8,
            conv_blocks: 1,
            encoder_blocks: 1,
            decoder_blocks: 1,
            heads: 2,
            ..PositionModelConfig::new(4, 2)
        }
    }

    fn toy_frames(n: usize) -> Vec<TrainingFrame> {
        (0..n)
            .map(|k| {
                let phase = k as f64 * 0.37;
                let gt_markers = vec![
                    Vec3::new(0.3 + 0.05 * phase.sin(), 0.1, 0.0),
                    Vec3::new(-0.3, 0.1 + 0.05 * phase.cos(), 0.0),
                    Vec3::new(0.0, 0.5, 0.1),
                    Vec3::new(0.0, 0.5, -0.1),
                ];
                let gt_joints = vec![Vec3::new(0.0, 0.2, 0.0), Vec3::new(0.0, 0.6, 0.0)];
                let mut input = MarkerFrame::fully_visible(gt_markers.clone());
                // occlude one marker per frame, round-robin
                let hide = k % 4;
                input.visibility[hide] = false;
                input.positions[hide] = Vec3::zeros();
                TrainingFrame {
                    input,
                    gt_markers,
                    gt_joints,
                    gt_rotations: vec![Rotation::identity(); 2],
                }
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let mut solver = PositionSolver::new(tiny_config(), 5).unwrap();
        let before: Vec<Array2<f64>> =
            solver.params().iter().map(|(_, _, v)| v.clone()).collect();
        let config = TrainConfig {
            steps: 3,
            batch_size: 4,
            deterministic: true,
            adam: AdamConfig {
                learning_rate: 0.0,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        train_position(&mut solver, &toy_frames(8), &config).unwrap();
        for ((_, _, after), before) in solver.params().iter().zip(&before) {
            assert_eq!(after, before);
        }
    }

    #[test]
    fn loss_decreases_on_a_smoothed_window() {
        let mut solver = PositionSolver::new(tiny_config(), 5).unwrap();
        let config = TrainConfig {
            steps: 120,
            batch_size: 8,
            deterministic: true,
            log_every: 1,
            adam: AdamConfig {
                learning_rate: 3e-3,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        let report = train_position(&mut solver, &toy_frames(8), &config).unwrap();
        let first: f64 = report.rows[..20].iter().map(|r| r.l_p).sum::<f64>() / 20.0;
        let last: f64 = report.rows[100..].iter().map(|r| r.l_p).sum::<f64>() / 20.0;
        assert!(
            last < first,
            "smoothed loss should drop: first window {first}, last window {last}"
        );
    }

    #[test]
    fn deterministic_runs_are_bitwise_identical() {
        let config = TrainConfig {
            steps: 10,
            batch_size: 4,
            seed: 42,
            deterministic: true,
            ..TrainConfig::default()
        };
        let frames = toy_frames(8);
        let mut a = PositionSolver::new(tiny_config(), 5).unwrap();
        train_position(&mut a, &frames, &config).unwrap();
        let mut b = PositionSolver::new(tiny_config(), 5).unwrap();
        train_position(&mut b, &frames, &config).unwrap();
        for ((_, name_a, va), (_, _, vb)) in a.params().iter().zip(b.params().iter()) {
            assert_eq!(va, vb, "parameter {name_a} differs between identical runs");
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let mut solver = PositionSolver::new(tiny_config(), 5).unwrap();
        let err = train_position(&mut solver, &[], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::ContractViolation(_)));
    }
}
