//! MASK visibility binary: magic `MASK`, `u32` frame count, `u32` marker
//! count, then the frames×markers boolean grid packed row-major (frame by
//! frame), eight flags per byte, least-significant bit first. Padding bits in
//! the final byte must be zero so the encoding is canonical and round-trips
//! bitwise.

use crate::{atomic_write, IoError};
use byteorder::{ByteOrder, LittleEndian};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MASK";
const HEADER_LEN: u64 = 12;

/// Serializes a visibility grid (`true` = visible) into MASK bytes.
///
/// Every row must have the same length.
pub fn mask_to_bytes(frames: &[Vec<bool>]) -> Result<Vec<u8>, IoError> {
    let markers = frames.first().map_or(0, Vec::len);
    for (i, row) in frames.iter().enumerate() {
        if row.len() != markers {
            return Err(IoError::BadManifest(format!(
                "mask frame {i} has {} markers, frame 0 has {markers}",
                row.len()
            )));
        }
    }
    let total_bits = frames.len() * markers;
    let mut out = Vec::with_capacity(HEADER_LEN as usize + total_bits.div_ceil(8));
    out.extend_from_slice(MAGIC);
    let mut word = [0u8; 4];
    LittleEndian::write_u32(&mut word, frames.len() as u32);
    out.extend_from_slice(&word);
    LittleEndian::write_u32(&mut word, markers as u32);
    out.extend_from_slice(&word);
    let mut acc = 0u8;
    let mut used = 0u8;
    for row in frames {
        for &bit in row {
            if bit {
                acc |= 1 << used;
            }
            used += 1;
            if used == 8 {
                out.push(acc);
                acc = 0;
                used = 0;
            }
        }
    }
    if used > 0 {
        out.push(acc);
    }
    Ok(out)
}

/// Parses MASK bytes back into the boolean grid.
pub fn mask_from_bytes(bytes: &[u8]) -> Result<Vec<Vec<bool>>, IoError> {
    if bytes.len() < HEADER_LEN as usize {
        return Err(IoError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::BadMagic {
            expected: "MASK",
            found: [bytes[0], bytes[1], bytes[2], bytes[3]],
        });
    }
    let frames = LittleEndian::read_u32(&bytes[4..8]) as usize;
    let markers = LittleEndian::read_u32(&bytes[8..12]) as usize;
    let total_bits = frames * markers;
    let expected = HEADER_LEN + total_bits.div_ceil(8) as u64;
    if (bytes.len() as u64) < expected {
        return Err(IoError::Truncated {
            expected,
            actual: bytes.len() as u64,
        });
    }
    if (bytes.len() as u64) > expected {
        return Err(IoError::TrailingBytes {
            expected: bytes.len() as u64 - expected,
        });
    }
    let payload = &bytes[HEADER_LEN as usize..];
    let bit_at = |index: usize| payload[index / 8] >> (index % 8) & 1 == 1;
    // Reject nonzero padding so every grid has exactly one encoding.
    for pad in total_bits..payload.len() * 8 {
        if bit_at(pad) {
            return Err(IoError::NonFinite {
                offset: HEADER_LEN + (pad / 8) as u64,
            });
        }
    }
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let mut row = Vec::with_capacity(markers);
        for m in 0..markers {
            row.push(bit_at(f * markers + m));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn save_mask(path: &Path, frames: &[Vec<bool>]) -> Result<(), IoError> {
    atomic_write(path, &mask_to_bytes(frames)?)
}

pub fn load_mask(path: &Path) -> Result<Vec<Vec<bool>>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    mask_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid(frames: usize, markers: usize) -> Vec<Vec<bool>> {
        (0..frames)
            .map(|f| (0..markers).map(|m| (f * 31 + m * 7) % 3 == 0).collect())
            .collect()
    }

    #[test]
    fn round_trip_is_bitwise() {
        for (frames, markers) in [(1, 1), (3, 8), (5, 13), (10, 12)] {
            let grid = sample_grid(frames, markers);
            let bytes = mask_to_bytes(&grid).unwrap();
            let reloaded = mask_from_bytes(&bytes).unwrap();
            assert_eq!(grid, reloaded);
            assert_eq!(bytes, mask_to_bytes(&reloaded).unwrap());
        }
    }

    #[test]
    fn truncated_file_names_expected_vs_actual() {
        let bytes = mask_to_bytes(&sample_grid(4, 9)).unwrap();
        let cut = &bytes[..bytes.len() - 2];
        match mask_from_bytes(cut) {
            Err(IoError::Truncated { expected, actual }) => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(actual, bytes.len() as u64 - 2);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_reported() {
        let mut bytes = mask_to_bytes(&sample_grid(1, 1)).unwrap();
        bytes[3] = b'Q';
        assert!(matches!(
            mask_from_bytes(&bytes),
            Err(IoError::BadMagic { expected: "MASK", .. })
        ));
    }

    #[test]
    fn nonzero_padding_is_rejected() {
        let mut bytes = mask_to_bytes(&sample_grid(1, 3)).unwrap();
        let last = bytes.len() - 1;
        bytes[last] |= 0b1000_0000;
        assert!(mask_from_bytes(&bytes).is_err());
    }

    #[test]
    fn ragged_grid_is_rejected() {
        let grid = vec![vec![true, false], vec![true]];
        assert!(mask_to_bytes(&grid).is_err());
    }
}
