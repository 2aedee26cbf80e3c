//! OCKP checkpoint binary for solver parameters: magic `OCKP`, `u32`
//! version (= 1), `u32` block count, then per block a length-prefixed UTF-8
//! name, `u32` rows, `u32` cols, and rows×cols little-endian `f64` values in
//! row-major order. Blocks appear in parameter registration order, so a
//! deterministic training run always hashes to the same checkpoint.

use crate::{atomic_write, IoError};
use byteorder::{ByteOrder, LittleEndian};
use ndarray::Array2;
use occluforge_solver::Parameters;
use std::path::Path;

const MAGIC: &[u8; 4] = b"OCKP";
const VERSION: u32 = 1;

/// One named parameter matrix from a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointBlock {
    pub name: String,
    pub values: Array2<f64>,
}

/// Serializes all parameters in registration order.
pub fn checkpoint_to_bytes(params: &Parameters) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let mut word = [0u8; 4];
    LittleEndian::write_u32(&mut word, VERSION);
    out.extend_from_slice(&word);
    LittleEndian::write_u32(&mut word, params.len() as u32);
    out.extend_from_slice(&word);
    let mut scratch = [0u8; 8];
    for (_, name, values) in params.iter() {
        LittleEndian::write_u32(&mut word, name.len() as u32);
        out.extend_from_slice(&word);
        out.extend_from_slice(name.as_bytes());
        LittleEndian::write_u32(&mut word, values.nrows() as u32);
        out.extend_from_slice(&word);
        LittleEndian::write_u32(&mut word, values.ncols() as u32);
        out.extend_from_slice(&word);
        for r in 0..values.nrows() {
            for c in 0..values.ncols() {
                LittleEndian::write_f64(&mut scratch, values[(r, c)]);
                out.extend_from_slice(&scratch);
            }
        }
    }
    out
}

/// Parses checkpoint bytes into named blocks.
pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Vec<CheckpointBlock>, IoError> {
    if bytes.len() < 12 {
        return Err(IoError::Truncated {
            expected: 12,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::BadMagic {
            expected: "OCKP",
            found: [bytes[0], bytes[1], bytes[2], bytes[3]],
        });
    }
    let version = LittleEndian::read_u32(&bytes[4..8]);
    if version != VERSION {
        return Err(IoError::BadVersion {
            expected: VERSION,
            found: version,
            offset: 4,
        });
    }
    let blocks = LittleEndian::read_u32(&bytes[8..12]) as usize;
    let mut offset = 12usize;
    let need = |offset: usize, len: usize, total: usize| -> Result<(), IoError> {
        if offset + len > total {
            Err(IoError::Truncated {
                expected: (offset + len) as u64,
                actual: total as u64,
            })
        } else {
            Ok(())
        }
    };
    let mut out = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        need(offset, 4, bytes.len())?;
        let name_len = LittleEndian::read_u32(&bytes[offset..offset + 4]) as usize;
        offset += 4;
        need(offset, name_len, bytes.len())?;
        let name = std::str::from_utf8(&bytes[offset..offset + name_len])
            .map_err(|_| IoError::BadManifest(format!("non-UTF-8 block name at byte {offset}")))?
            .to_string();
        offset += name_len;
        need(offset, 8, bytes.len())?;
        let rows = LittleEndian::read_u32(&bytes[offset..offset + 4]) as usize;
        let cols = LittleEndian::read_u32(&bytes[offset + 4..offset + 8]) as usize;
        offset += 8;
        need(offset, rows * cols * 8, bytes.len())?;
        let mut values = Array2::zeros((rows, cols));
        for r in 0..rows {
            for c in 0..cols {
                let v = LittleEndian::read_f64(&bytes[offset..offset + 8]);
                if !v.is_finite() {
                    return Err(IoError::NonFinite {
                        offset: offset as u64,
                    });
                }
                values[(r, c)] = v;
                offset += 8;
            }
        }
        out.push(CheckpointBlock { name, values });
    }
    if offset != bytes.len() {
        return Err(IoError::TrailingBytes {
            expected: (bytes.len() - offset) as u64,
        });
    }
    Ok(out)
}

pub fn save_checkpoint(path: &Path, params: &Parameters) -> Result<(), IoError> {
    atomic_write(path, &checkpoint_to_bytes(params))
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<CheckpointBlock>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

/// Copies checkpoint blocks into an already-constructed parameter set.
///
/// Every block must match an existing parameter by name and shape, and every
/// parameter must be covered — a partial or mismatched checkpoint means the
/// architecture differs from the one that produced it.
pub fn load_checkpoint_into(path: &Path, params: &mut Parameters) -> Result<(), IoError> {
    let blocks = load_checkpoint(path)?;
    if blocks.len() != params.len() {
        return Err(IoError::BadManifest(format!(
            "checkpoint has {} blocks, model has {} parameters",
            blocks.len(),
            params.len()
        )));
    }
    for block in blocks {
        let id = params.id_of(&block.name).ok_or_else(|| {
            IoError::BadManifest(format!("checkpoint block {:?} not in model", block.name))
        })?;
        let target = params.get_mut(id);
        if target.dim() != block.values.dim() {
            return Err(IoError::BadManifest(format!(
                "checkpoint block {:?} is {:?}, model expects {:?}",
                block.name,
                block.values.dim(),
                target.dim()
            )));
        }
        target.assign(&block.values);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sha256_hex;
    use occluforge_solver::{PositionModelConfig, PositionSolver};

    fn small_solver(seed: u64) -> PositionSolver {
        let mut config = PositionModelConfig::new(4, 2);
        config.width = 8;
        config.conv_blocks = 1;
        config.encoder_blocks = 1;
        config.decoder_blocks = 1;
        config.heads = 2;
        PositionSolver::new(config, seed).unwrap()
    }

    #[test]
    fn round_trip_restores_every_parameter_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ockp");
        let solver = small_solver(3);
        save_checkpoint(&path, solver.params()).unwrap();

        let mut other = small_solver(99);
        load_checkpoint_into(&path, other.params_mut()).unwrap();
        for ((_, name_a, a), (_, name_b, b)) in solver.params().iter().zip(other.params().iter()) {
            assert_eq!(name_a, name_b);
            assert_eq!(a, b, "parameter {name_a} must restore bitwise");
        }
    }

    #[test]
    fn identical_parameters_hash_identically() {
        let a = checkpoint_to_bytes(small_solver(7).params());
        let b = checkpoint_to_bytes(small_solver(7).params());
        assert_eq!(sha256_hex(&a), sha256_hex(&b));
        let c = checkpoint_to_bytes(small_solver(8).params());
        assert_ne!(sha256_hex(&a), sha256_hex(&c));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ockp");
        save_checkpoint(&path, small_solver(3).params()).unwrap();
        let mut wider = PositionSolver::new(
            {
                let mut c = PositionModelConfig::new(4, 2);
                c.width = 16;
                c.conv_blocks = 1;
                c.encoder_blocks = 1;
                c.decoder_blocks = 1;
                c.heads = 2;
                c
            },
            0,
        )
        .unwrap();
        assert!(load_checkpoint_into(&path, wider.params_mut()).is_err());
    }

    #[test]
    fn truncated_checkpoint_is_detected() {
        let bytes = checkpoint_to_bytes(small_solver(1).params());
        assert!(matches!(
            checkpoint_from_bytes(&bytes[..bytes.len() - 3]),
            Err(IoError::Truncated { .. })
        ));
    }
}
