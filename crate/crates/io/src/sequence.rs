//! OCSQ sequence binary: one file per training sequence, pairing corrupted
//! marker input with ground truth. Layout: magic `OCSQ`, `u32` version
//! (= 1), `u32` frames, `u32` markers, `u32` joints, then frame-major
//! little-endian payload. Per frame:
//!
//! 1. input marker positions, markers × 3 `f64` (occluded markers hold
//!    whatever the corruption pass left, typically zeros);
//! 2. input visibility flags, ⌈markers/8⌉ bytes, LSB-first, zero-padded;
//! 3. ground-truth marker positions, markers × 3 `f64`;
//! 4. ground-truth joint positions, joints × 3 `f64`;
//! 5. ground-truth joint rotations, joints × 9 `f64`, row-major 3×3.
//!
//! Rotations are stored as full matrices rather than quaternions so the
//! round-trip is bitwise in both directions: no re-extraction rounding.
//! Loaded matrices are checked for orthonormality (within 1e-6) but not
//! re-projected.

use crate::{atomic_write, IoError};
use byteorder::{ByteOrder, LittleEndian};
use occluforge_core::{Mat3, MarkerFrame, Rotation, Vec3};
use occluforge_solver::TrainingFrame;
use std::path::Path;

const MAGIC: &[u8; 4] = b"OCSQ";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

fn frame_stride(markers: usize, joints: usize) -> usize {
    markers * 24 + markers.div_ceil(8) + markers * 24 + joints * 24 + joints * 72
}

/// Serializes a sequence of training frames into OCSQ bytes.
pub fn sequence_to_bytes(frames: &[TrainingFrame]) -> Result<Vec<u8>, IoError> {
    let markers = frames.first().map_or(0, |f| f.input.positions.len());
    let joints = frames.first().map_or(0, |f| f.gt_joints.len());
    for (i, f) in frames.iter().enumerate() {
        let consistent = f.input.positions.len() == markers
            && f.input.visibility.len() == markers
            && f.gt_markers.len() == markers
            && f.gt_joints.len() == joints
            && f.gt_rotations.len() == joints;
        if !consistent {
            return Err(IoError::BadManifest(format!(
                "sequence frame {i} disagrees with frame 0 on marker/joint counts"
            )));
        }
    }
    let mut out =
        Vec::with_capacity(HEADER_LEN + frames.len() * frame_stride(markers, joints));
    out.extend_from_slice(MAGIC);
    let mut word = [0u8; 4];
    for value in [VERSION, frames.len() as u32, markers as u32, joints as u32] {
        LittleEndian::write_u32(&mut word, value);
        out.extend_from_slice(&word);
    }
    let mut scratch = [0u8; 8];
    let mut push_f64 = |v: f64, out: &mut Vec<u8>| {
        LittleEndian::write_f64(&mut scratch, v);
        out.extend_from_slice(&scratch);
    };
    let push_vec3 = |v: &Vec3, out: &mut Vec<u8>, push: &mut dyn FnMut(f64, &mut Vec<u8>)| {
        push(v.x, out);
        push(v.y, out);
        push(v.z, out);
    };
    for frame in frames {
        for p in &frame.input.positions {
            push_vec3(p, &mut out, &mut push_f64);
        }
        let mut acc = 0u8;
        let mut used = 0u8;
        for &bit in &frame.input.visibility {
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
        if used > 0 {
            out.push(acc);
        }
        for p in &frame.gt_markers {
            push_vec3(p, &mut out, &mut push_f64);
        }
        for p in &frame.gt_joints {
            push_vec3(p, &mut out, &mut push_f64);
        }
        for rotation in &frame.gt_rotations {
            let m = rotation.matrix();
            for r in 0..3 {
                for c in 0..3 {
                    push_f64(m[(r, c)], &mut out);
                }
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn f64(&mut self) -> Result<f64, IoError> {
        let v = LittleEndian::read_f64(&self.bytes[self.offset..self.offset + 8]);
        if !v.is_finite() {
            return Err(IoError::NonFinite {
                offset: self.offset as u64,
            });
        }
        self.offset += 8;
        Ok(v)
    }

    fn vec3(&mut self) -> Result<Vec3, IoError> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }

    fn bits(&mut self, count: usize) -> Result<Vec<bool>, IoError> {
        let bytes = count.div_ceil(8);
        let slab = &self.bytes[self.offset..self.offset + bytes];
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            out.push(slab[i / 8] >> (i % 8) & 1 == 1);
        }
        for pad in count..bytes * 8 {
            if slab[pad / 8] >> (pad % 8) & 1 == 1 {
                return Err(IoError::NonFinite {
                    offset: (self.offset + pad / 8) as u64,
                });
            }
        }
        self.offset += bytes;
        Ok(out)
    }
}

/// Parses OCSQ bytes, validating lengths, finiteness, and rotation
/// orthonormality.
pub fn sequence_from_bytes(bytes: &[u8]) -> Result<Vec<TrainingFrame>, IoError> {
    if bytes.len() < HEADER_LEN {
        return Err(IoError::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::BadMagic {
            expected: "OCSQ",
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
    let frames = LittleEndian::read_u32(&bytes[8..12]) as usize;
    let markers = LittleEndian::read_u32(&bytes[12..16]) as usize;
    let joints = LittleEndian::read_u32(&bytes[16..20]) as usize;
    let expected = (HEADER_LEN + frames * frame_stride(markers, joints)) as u64;
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
    let mut cursor = Cursor {
        bytes,
        offset: HEADER_LEN,
    };
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let mut positions = Vec::with_capacity(markers);
        for _ in 0..markers {
            positions.push(cursor.vec3()?);
        }
        let visibility = cursor.bits(markers)?;
        let mut gt_markers = Vec::with_capacity(markers);
        for _ in 0..markers {
            gt_markers.push(cursor.vec3()?);
        }
        let mut gt_joints = Vec::with_capacity(joints);
        for _ in 0..joints {
            gt_joints.push(cursor.vec3()?);
        }
        let mut gt_rotations = Vec::with_capacity(joints);
        for _ in 0..joints {
            let matrix_offset = cursor.offset;
            let mut m = Mat3::zeros();
            for r in 0..3 {
                for c in 0..3 {
                    m[(r, c)] = cursor.f64()?;
                }
            }
            let gram = m.transpose() * m;
            let drift = (gram - Mat3::identity()).abs().max();
            if drift > 1e-6 || m.determinant() < 0.0 {
                return Err(IoError::Schema {
                    path: std::path::PathBuf::new(),
                    message: format!(
                        "rotation matrix at byte {matrix_offset} is not orthonormal (drift {drift:.3e})"
                    ),
                });
            }
            gt_rotations.push(Rotation::from_matrix_unchecked(m));
        }
        out.push(TrainingFrame {
            input: MarkerFrame {
                positions,
                visibility,
            },
            gt_markers,
            gt_joints,
            gt_rotations,
        });
    }
    Ok(out)
}

pub fn save_sequence(path: &Path, frames: &[TrainingFrame]) -> Result<(), IoError> {
    atomic_write(path, &sequence_to_bytes(frames)?)
}

pub fn load_sequence(path: &Path) -> Result<Vec<TrainingFrame>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    sequence_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_frames(n: usize, markers: usize, joints: usize) -> Vec<TrainingFrame> {
        (0..n)
            .map(|f| TrainingFrame {
                input: MarkerFrame {
                    positions: (0..markers)
                        .map(|m| Vec3::new(f as f64 + 0.1 * m as f64, 0.5, -0.25))
                        .collect(),
                    visibility: (0..markers).map(|m| (f + m) % 3 != 0).collect(),
                },
                gt_markers: (0..markers)
                    .map(|m| Vec3::new(f as f64, m as f64 * 0.01, 1.0 / 3.0))
                    .collect(),
                gt_joints: (0..joints)
                    .map(|j| Vec3::new(0.0, 0.4 * j as f64, 0.0))
                    .collect(),
                gt_rotations: (0..joints)
                    .map(|j| {
                        Rotation::from_axis_angle(
                            Vec3::new(1.0, 0.0, 0.0),
                            0.2 * f as f64 + 0.15 * j as f64,
                        )
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn round_trip_is_bitwise_both_directions() {
        let frames = sample_frames(4, 5, 3);
        let bytes = sequence_to_bytes(&frames).unwrap();
        let reloaded = sequence_from_bytes(&bytes).unwrap();
        assert_eq!(bytes, sequence_to_bytes(&reloaded).unwrap());
        for (a, b) in frames.iter().zip(&reloaded) {
            assert_eq!(a.input.positions, b.input.positions);
            assert_eq!(a.input.visibility, b.input.visibility);
            assert_eq!(a.gt_markers, b.gt_markers);
            assert_eq!(a.gt_joints, b.gt_joints);
            for (ra, rb) in a.gt_rotations.iter().zip(&b.gt_rotations) {
                assert_eq!(ra.matrix(), rb.matrix());
            }
        }
    }

    #[test]
    fn truncation_and_magic_errors() {
        let bytes = sequence_to_bytes(&sample_frames(2, 4, 2)).unwrap();
        assert!(matches!(
            sequence_from_bytes(&bytes[..bytes.len() - 1]),
            Err(IoError::Truncated { .. })
        ));
        let mut corrupt = bytes.clone();
        corrupt[1] = b'!';
        assert!(matches!(
            sequence_from_bytes(&corrupt),
            Err(IoError::BadMagic { expected: "OCSQ", .. })
        ));
    }

    #[test]
    fn non_orthonormal_rotation_is_rejected() {
        let frames = sample_frames(1, 4, 2);
        let mut bytes = sequence_to_bytes(&frames).unwrap();
        // First rotation entry lives after positions, bits, gt markers, and
        // gt joints.
        let offset = HEADER_LEN + 4 * 24 + 1 + 4 * 24 + 2 * 24;
        bytes[offset..offset + 8].copy_from_slice(&5.0f64.to_le_bytes());
        assert!(matches!(
            sequence_from_bytes(&bytes),
            Err(IoError::Schema { .. })
        ));
    }

    #[test]
    fn nan_is_located() {
        let frames = sample_frames(1, 4, 2);
        let mut bytes = sequence_to_bytes(&frames).unwrap();
        bytes[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            sequence_from_bytes(&bytes),
            Err(IoError::NonFinite { offset }) if offset == HEADER_LEN as u64
        ));
    }
}
