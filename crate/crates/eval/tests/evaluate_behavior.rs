//! Dataset evaluation behavior: oracle calibration, bucket accounting, the
//! merged pipeline's failure path, and report determinism.

use occluforge_core::{
    forward_kinematics, Joint, MarkerBinding, MarkerFrame, MarkerLayout, Pose, Rotation, Skeleton,
    Vec3,
};
use occluforge_eval::{
    evaluate, DecoupledPipeline, EvalSequence, MergedPipeline, OracleStub,
};
use occluforge_solver::{
    PositionModelConfig, PositionSolver, RotationSolverConfig, RotationSolver, TrainingFrame,
};

const MARKERS: usize = 6;
const JOINTS: usize = 3;
const KEY_MARKERS: [usize; 4] = [0, 1, 2, 3];
const MARKER_ATTACHMENTS: [(usize, [f64; 3]); MARKERS] = [
    (0, [0.12, 0.00, 0.00]),
    (0, [-0.12, 0.02, 0.00]),
    (0, [0.00, 0.02, 0.12]),
    (0, [0.00, 0.00, -0.12]),
    (1, [0.09, 0.20, 0.00]),
    (2, [0.00, 0.25, 0.07]),
];

fn chain_skeleton() -> Skeleton {
    Skeleton::new(vec![
        Joint {
            name: "root".into(),
            parent: None,
            rest_offset: Vec3::zeros(),
        },
        Joint {
            name: "mid".into(),
            parent: Some(0),
            rest_offset: Vec3::new(0.0, 0.4, 0.0),
        },
        Joint {
            name: "tip".into(),
            parent: Some(1),
            rest_offset: Vec3::new(0.0, 0.4, 0.0),
        },
    ])
    .unwrap()
}

fn marker_layout() -> MarkerLayout {
    let names = (0..MARKERS).map(|i| format!("m{i}")).collect();
    let bindings = vec![
        MarkerBinding {
            triangle: 0,
            beta: 0.25,
            gamma: 0.25,
        };
        MARKERS
    ];
    MarkerLayout::new(names, bindings, KEY_MARKERS.to_vec()).unwrap()
}

fn markers_at(skeleton: &Skeleton, pose: &Pose) -> Vec<Vec3> {
    let fk = forward_kinematics(skeleton, pose).unwrap();
    MARKER_ATTACHMENTS
        .iter()
        .map(|(joint, local)| fk.globals[*joint].apply(&Vec3::new(local[0], local[1], local[2])))
        .collect()
}

fn chain_pose(t: f64) -> Pose {
    Pose {
        root_translation: Vec3::new(0.2 * (0.9 * t).sin(), 0.6, 0.2 * (0.7 * t).cos()),
        joint_rotations: vec![
            Rotation::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), 0.4 * (0.8 * t).sin()),
            Rotation::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 0.6 * (1.1 * t).sin()),
            Rotation::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), 0.8 * (1.4 * t).sin()),
        ],
    }
}

/// A sequence occluding exactly `occluded_markers` (by index) every frame.
fn sequence_with_occlusion(n: usize, occluded_markers: &[usize], t0: f64) -> EvalSequence {
    let skeleton = chain_skeleton();
    let frames = (0..n)
        .map(|k| {
            let pose = chain_pose(t0 + k as f64 * 0.17);
            let fk = forward_kinematics(&skeleton, &pose).unwrap();
            let gt_markers = markers_at(&skeleton, &pose);
            let visibility: Vec<bool> =
                (0..MARKERS).map(|i| !occluded_markers.contains(&i)).collect();
            let positions = gt_markers
                .iter()
                .zip(&visibility)
                .map(|(p, &v)| if v { *p } else { Vec3::zeros() })
                .collect();
            TrainingFrame {
                input: MarkerFrame {
                    positions,
                    visibility,
                },
                gt_markers,
                gt_joints: fk.positions.clone(),
                gt_rotations: pose.joint_rotations.clone(),
            }
        })
        .collect();
    EvalSequence { frames }
}

fn tpose_reference() -> Vec<Vec3> {
    markers_at(&chain_skeleton(), &Pose::identity(JOINTS))
}

fn small_decoupled(no_chain: bool) -> DecoupledPipeline {
    let position = PositionSolver::new(
        PositionModelConfig {
            width: 16,
            conv_blocks: 1,
            encoder_blocks: 1,
            decoder_blocks: 2,
            heads: 2,
            no_chain,
            ..PositionModelConfig::new(MARKERS, JOINTS)
        },
        71,
    )
    .unwrap();
    let rotation = RotationSolver::new(
        RotationSolverConfig {
            width: 16,
            blocks: 1,
            heads: 2,
            ..RotationSolverConfig::new(MARKERS, JOINTS)
        },
        73,
    )
    .unwrap();
    DecoupledPipeline::new(
        position,
        rotation,
        marker_layout(),
        tpose_reference(),
        if no_chain { "no-chain" } else { "full" },
    )
}

/// Three sequences with constant occluded fractions 0, 1/6, 2/6 land in the
/// 5%, 15%, and 20% severity buckets respectively.
fn bucketed_dataset() -> Vec<EvalSequence> {
    vec![
        sequence_with_occlusion(8, &[], 0.0),
        sequence_with_occlusion(6, &[4], 2.0),
        sequence_with_occlusion(5, &[4, 5], 4.0),
    ]
}

#[test]
fn oracle_stub_scores_zero_in_every_bucket() {
    let report = evaluate(&OracleStub, &bucketed_dataset()).unwrap();
    assert_eq!(report.overall.frames, 19);
    assert_eq!(report.overall.failures, 0);
    assert_eq!(report.overall.jpe_cm, Some(0.0));
    assert_eq!(report.overall.joe_deg, Some(0.0));
    for bucket in &report.buckets {
        if bucket.frames > 0 {
            assert_eq!(bucket.jpe_cm, Some(0.0));
            assert_eq!(bucket.joe_deg, Some(0.0));
        }
    }
    assert!(report.per_joint_jpe_cm.iter().all(|&v| v == 0.0));
    assert!(report.per_joint_joe_deg.iter().all(|&v| v == 0.0));
}

#[test]
fn sequences_land_in_expected_buckets_and_counts_sum() {
    let report = evaluate(&OracleStub, &bucketed_dataset()).unwrap();
    // Severity order: 5%, 10%, 15%, 20%.
    assert_eq!(report.buckets[0].sequences, 1);
    assert_eq!(report.buckets[0].frames, 8);
    assert_eq!(report.buckets[1].sequences, 0);
    assert_eq!(report.buckets[1].frames, 0);
    assert_eq!(report.buckets[1].jpe_cm, None);
    assert_eq!(report.buckets[2].sequences, 1);
    assert_eq!(report.buckets[2].frames, 6);
    assert_eq!(report.buckets[3].sequences, 1);
    assert_eq!(report.buckets[3].frames, 5);
    let total: usize = report.buckets.iter().map(|b| b.frames).sum();
    assert_eq!(total, report.overall.frames);
}

#[test]
fn bucket_merge_reproduces_overall_metrics() {
    // An untrained pipeline produces nonzero, bucket-dependent errors; the
    // frame-weighted merge must still equal the overall numbers.
    let report = evaluate(&small_decoupled(false), &bucketed_dataset()).unwrap();
    assert!(report.overall.jpe_cm.unwrap() > 0.0);
    report.self_check().unwrap();
    let frames: usize = report.buckets.iter().map(|b| b.frames).sum();
    let merged: f64 = report
        .buckets
        .iter()
        .filter_map(|b| b.jpe_cm.map(|v| v * b.frames as f64))
        .sum::<f64>()
        / frames as f64;
    let overall = report.overall.jpe_cm.unwrap();
    assert!((merged - overall).abs() <= 1e-9 * overall.max(1.0));
}

#[test]
fn merged_pipeline_counts_underdetermined_frames_as_failures() {
    let solver = PositionSolver::new(
        PositionModelConfig {
            width: 16,
            conv_blocks: 1,
            encoder_blocks: 1,
            decoder_blocks: 1,
            heads: 2,
            rotation_head: true,
            ..PositionModelConfig::new(MARKERS, JOINTS)
        },
        79,
    )
    .unwrap();
    let pipeline =
        MergedPipeline::new(solver, marker_layout(), tpose_reference(), "no-decouple").unwrap();

    // Occluding three of the four alignment markers leaves only one — the
    // rigid fit is underdetermined on every frame of that sequence.
    let dataset = vec![
        sequence_with_occlusion(6, &[], 0.0),
        sequence_with_occlusion(4, &[1, 2, 3], 3.0),
    ];
    let report = evaluate(&pipeline, &dataset).unwrap();
    assert_eq!(report.overall.failures, 4);
    assert_eq!(report.overall.frames, 6);
    // Failed frames carry no metrics but are reported in their bucket.
    let failing_bucket = report.buckets.iter().find(|b| b.failures == 4).unwrap();
    assert_eq!(failing_bucket.frames, 0);
    assert_eq!(failing_bucket.jpe_cm, None);
}

#[test]
fn evaluation_report_is_deterministic() {
    let pipeline = small_decoupled(false);
    let dataset = bucketed_dataset();
    let a = evaluate(&pipeline, &dataset).unwrap();
    let b = evaluate(&pipeline, &dataset).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reduced_attention_pipeline_runs_end_to_end() {
    let report = evaluate(&small_decoupled(true), &bucketed_dataset()).unwrap();
    assert_eq!(report.overall.failures, 0);
    assert!(report.fingerprint.contains("no-chain"));
    assert!(report.overall.jpe_cm.unwrap().is_finite());
}

#[test]
fn csv_and_table_render() {
    let report = evaluate(&OracleStub, &bucketed_dataset()).unwrap();
    let csv = report.to_csv();
    assert!(csv.starts_with("solver,bucket,sequences,frames,failures,jpe_cm,joe_deg\r\n"));
    assert_eq!(csv.lines().count(), 6); // header + 4 buckets + overall
    let table = format!("{report}");
    assert!(table.contains("overall"));
    assert!(table.contains("oracle"));
}
