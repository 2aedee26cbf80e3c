//! Shared run context: resolved configuration, effective seed and thread
//! count, and the reproducibility manifest every command writes next to its
//! outputs.

use crate::error::CliError;
use occluforge_io::{load_project_config, sha256_hex, ProjectConfig, RunManifest};
use std::path::{Path, PathBuf};

pub struct Ctx {
    pub config: ProjectConfig,
    pub config_sha256: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub deterministic: bool,
    pub out: Option<PathBuf>,
}

impl Ctx {
    pub fn new(
        config_path: Option<&Path>,
        seed: Option<u64>,
        threads: usize,
        deterministic: bool,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let (config, config_sha256) = match config_path {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| {
                    CliError::Validation(format!("cannot read config {}: {e}", path.display()))
                })?;
                (load_project_config(path)?, Some(sha256_hex(&bytes)))
            }
            None => (ProjectConfig::default(), None),
        };
        let seed = seed.unwrap_or(config.seed);
        // Deterministic mode forces a single worker so reductions happen in
        // one fixed order.
        let threads = if deterministic { 1 } else { threads };
        if threads > 0 {
            // The global pool can only be built once per process; a second
            // attempt (tests invoking multiple commands) is not an error.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
        Ok(Ctx {
            config,
            config_sha256,
            seed,
            threads,
            deterministic,
            out,
        })
    }

    pub fn require_out(&self, what: &str) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Validation(format!("--out is required: {what}")))
    }

    /// Writes the reproducibility manifest. For directory outputs it lands
    /// at `<dir>/run.json`; for file outputs at `<file>.run.json`.
    pub fn write_manifest(
        &self,
        command: &str,
        anchor: &Path,
        anchor_is_dir: bool,
        outputs: &[String],
    ) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_sha256: self.config_sha256.clone(),
            seed: self.seed,
            threads: self.threads,
            deterministic: self.deterministic,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: outputs.to_vec(),
        };
        let path = if anchor_is_dir {
            anchor.join("run.json")
        } else {
            let mut name = anchor
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "out".to_string());
            name.push_str(".run.json");
            anchor.with_file_name(name)
        };
        manifest.write(&path)?;
        Ok(path)
    }
}

/// Marks which frames of an `n`-frame sequence go to the holdout split.
/// The fraction is accumulated so holdout frames are spread evenly through
/// the motion instead of clustering at one end.
pub fn holdout_split(n: usize, fraction: f64) -> Vec<bool> {
    (0..n)
        .map(|i| ((i + 1) as f64 * fraction).floor() > (i as f64 * fraction).floor())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_split_hits_the_requested_fraction() {
        let split = holdout_split(100, 0.2);
        assert_eq!(split.iter().filter(|h| **h).count(), 20);
        // Spread through the sequence: every block of 5 has exactly one.
        for chunk in split.chunks(5) {
            assert_eq!(chunk.iter().filter(|h| **h).count(), 1);
        }
        assert!(holdout_split(10, 0.0).iter().all(|h| !h));
    }
}
