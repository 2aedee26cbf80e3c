//! Cross-format integration: container integrity checking, project-config
//! schema validation, and the reproducibility manifest.

use occluforge_io::{
    load_container, load_project_config, save_container, IoError, ProjectConfig, RunManifest,
    generate_toy_dataset, CorruptionConfig, ToyConfig,
};

fn tiny_dataset(seed: u64) -> occluforge_io::Dataset {
    let toy = ToyConfig {
        joints: 3,
        markers: 6,
        frames: 30,
        sequences: 2,
        ..ToyConfig::default()
    };
    generate_toy_dataset(&toy, &CorruptionConfig::default(), seed)
        .unwrap()
        .dataset
}

#[test]
fn tampered_sequence_file_is_rejected_by_hash() {
    let dir = tempfile::tempdir().unwrap();
    save_container(dir.path(), &tiny_dataset(5)).unwrap();
    let victim = dir.path().join("sequences/seq_0001.ocsq");
    let mut bytes = std::fs::read(&victim).unwrap();
    let k = bytes.len() / 2;
    bytes[k] ^= 0xFF;
    std::fs::write(&victim, bytes).unwrap();
    match load_container(dir.path()) {
        Err(IoError::HashMismatch { name, .. }) => {
            assert_eq!(name, "sequences/seq_0001.ocsq");
        }
        other => panic!("expected HashMismatch, got {other:?}"),
    }
}

#[test]
fn unknown_container_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_container(dir.path(), &tiny_dataset(5)).unwrap();
    let manifest_path = dir.path().join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).unwrap();
    std::fs::write(
        &manifest_path,
        text.replace("OCCLUFORGE-1", "OCCLUFORGE-999"),
    )
    .unwrap();
    assert!(matches!(
        load_container(dir.path()),
        Err(IoError::BadManifest(_))
    ));
}

#[test]
fn missing_sequence_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    save_container(dir.path(), &tiny_dataset(5)).unwrap();
    std::fs::remove_file(dir.path().join("sequences/seq_0000.ocsq")).unwrap();
    assert!(matches!(
        load_container(dir.path()),
        Err(IoError::Io { .. })
    ));
}

#[test]
fn default_project_config_is_valid_and_round_trips() {
    let config = ProjectConfig::default();
    config.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("project.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let reloaded = load_project_config(&path).unwrap();
    assert_eq!(reloaded, config);
}

#[test]
fn minimal_config_document_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("project.json");
    std::fs::write(&path, "{}").unwrap();
    let config = load_project_config(&path).unwrap();
    assert_eq!(config, ProjectConfig::default());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("project.json");
    std::fs::write(&path, r#"{"sede": 7}"#).unwrap();
    assert!(matches!(
        load_project_config(&path),
        Err(IoError::Json { .. })
    ));
}

#[test]
fn cross_field_violations_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"solver": {"width": 30, "heads": 4}}"#,
        r#"{"training": {"learning_rate": 0.0}}"#,
        r#"{"toy": {"joints": 1}}"#,
        r#"{"toy": {"frames": 3, "sequences": 5}}"#,
        r#"{"corruption": {"occlusion_probability": 1.5}}"#,
        r#"{"bucket_thresholds": [0.1, 0.2, 0.3, 0.4]}"#,
    ];
    for (i, body) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad_{i}.json"));
        std::fs::write(&path, body).unwrap();
        assert!(
            matches!(load_project_config(&path), Err(IoError::Schema { .. })),
            "case {i} should fail schema validation: {body}"
        );
    }
}

#[test]
fn run_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let manifest = RunManifest {
        command: "toygen".into(),
        config_sha256: Some("ab".repeat(32)),
        seed: 7,
        threads: 2,
        deterministic: true,
        version: "0.1.0".into(),
        outputs: vec!["dataset/manifest.json".into()],
    };
    manifest.write(&path).unwrap();
    let reloaded: RunManifest =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(reloaded, manifest);
}
