//! MOCP motion binary: magic `MOCP`, `u32` version (= 1), `u32` frame count,
//! `u32` joint count, then little-endian `f64` payload in frame-major order —
//! per frame the root translation (3 floats), then one wxyz quaternion per
//! joint (4 floats each).
//!
//! Quaternions are kept exactly as read so that `save(load(f))` reproduces
//! `f` bitwise; conversion to rotation matrices happens only in
//! [`MotionFrame::to_pose`]. On load every quaternion norm must sit within
//! 1e-6 of 1 (it is renormalized during matrix conversion); anything beyond
//! that band is rejected with its frame and joint index.

use crate::{atomic_write, IoError};
use byteorder::{ByteOrder, LittleEndian};
use occluforge_core::{Pose, Rotation, Vec3};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MOCP";
const VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;

/// One frame of a motion clip: root translation plus per-joint local
/// rotations stored as wxyz quaternions.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFrame {
    pub root_translation: Vec3,
    pub quaternions_wxyz: Vec<[f64; 4]>,
}

impl MotionFrame {
    /// Converts stored quaternions into a kinematic pose.
    pub fn to_pose(&self) -> Result<Pose, IoError> {
        let mut joint_rotations = Vec::with_capacity(self.quaternions_wxyz.len());
        for q in &self.quaternions_wxyz {
            joint_rotations.push(Rotation::from_quaternion_wxyz(*q)?);
        }
        Ok(Pose {
            root_translation: self.root_translation,
            joint_rotations,
        })
    }

    pub fn from_pose(pose: &Pose) -> Self {
        MotionFrame {
            root_translation: pose.root_translation,
            quaternions_wxyz: pose
                .joint_rotations
                .iter()
                .map(Rotation::to_quaternion_wxyz)
                .collect(),
        }
    }
}

/// A sequence of poses with a uniform joint count.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub frames: Vec<MotionFrame>,
}

impl MotionClip {
    pub fn from_poses(poses: &[Pose]) -> Self {
        MotionClip {
            frames: poses.iter().map(MotionFrame::from_pose).collect(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.quaternions_wxyz.len())
    }
}

fn floats_per_frame(joints: usize) -> usize {
    3 + 4 * joints
}

/// Serializes a clip into MOCP bytes.
pub fn motion_to_bytes(clip: &MotionClip) -> Result<Vec<u8>, IoError> {
    let joints = clip.joint_count();
    for (i, frame) in clip.frames.iter().enumerate() {
        if frame.quaternions_wxyz.len() != joints {
            return Err(IoError::BadManifest(format!(
                "motion frame {i} has {} joints, frame 0 has {joints}",
                frame.quaternions_wxyz.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(
        HEADER_LEN as usize + clip.frames.len() * floats_per_frame(joints) * 8,
    );
    out.extend_from_slice(MAGIC);
    let mut word = [0u8; 4];
    LittleEndian::write_u32(&mut word, VERSION);
    out.extend_from_slice(&word);
    LittleEndian::write_u32(&mut word, clip.frames.len() as u32);
    out.extend_from_slice(&word);
    LittleEndian::write_u32(&mut word, joints as u32);
    out.extend_from_slice(&word);
    let mut scratch = [0u8; 8];
    let mut push = |v: f64, out: &mut Vec<u8>| {
        LittleEndian::write_f64(&mut scratch, v);
        out.extend_from_slice(&scratch);
    };
    for frame in &clip.frames {
        for k in 0..3 {
            push(frame.root_translation[k], &mut out);
        }
        for q in &frame.quaternions_wxyz {
            for &v in q {
                push(v, &mut out);
            }
        }
    }
    Ok(out)
}

/// Parses MOCP bytes, validating magic, version, payload length, finiteness,
/// and quaternion norms.
pub fn motion_from_bytes(bytes: &[u8]) -> Result<MotionClip, IoError> {
    if bytes.len() < HEADER_LEN as usize {
        return Err(IoError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::BadMagic {
            expected: "MOCP",
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
    let joints = LittleEndian::read_u32(&bytes[12..16]) as usize;
    let expected = HEADER_LEN + (frames * floats_per_frame(joints) * 8) as u64;
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
    let read_f64 = |index: usize| -> Result<f64, IoError> {
        let offset = HEADER_LEN as usize + index * 8;
        let v = LittleEndian::read_f64(&bytes[offset..offset + 8]);
        if !v.is_finite() {
            return Err(IoError::NonFinite {
                offset: offset as u64,
            });
        }
        Ok(v)
    };
    let stride = floats_per_frame(joints);
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let base = f * stride;
        let root_translation = Vec3::new(read_f64(base)?, read_f64(base + 1)?, read_f64(base + 2)?);
        let mut quaternions_wxyz = Vec::with_capacity(joints);
        for j in 0..joints {
            let q_base = base + 3 + 4 * j;
            let q = [
                read_f64(q_base)?,
                read_f64(q_base + 1)?,
                read_f64(q_base + 2)?,
                read_f64(q_base + 3)?,
            ];
            let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(IoError::QuaternionNotUnit {
                    frame: f,
                    joint: j,
                    norm,
                });
            }
            quaternions_wxyz.push(q);
        }
        out.push(MotionFrame {
            root_translation,
            quaternions_wxyz,
        });
    }
    Ok(MotionClip { frames: out })
}

pub fn save_motion(path: &Path, clip: &MotionClip) -> Result<(), IoError> {
    atomic_write(path, &motion_to_bytes(clip)?)
}

pub fn load_motion(path: &Path) -> Result<MotionClip, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    motion_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_clip(frames: usize, joints: usize) -> MotionClip {
        let poses: Vec<Pose> = (0..frames)
            .map(|f| Pose {
                root_translation: Vec3::new(f as f64 * 0.1, 0.9, -0.2),
                joint_rotations: (0..joints)
                    .map(|j| {
                        Rotation::from_axis_angle(
                            Vec3::new(0.0, 1.0, 0.0),
                            0.1 * (f as f64) + 0.37 * (j as f64),
                        )
                    })
                    .collect(),
            })
            .collect();
        MotionClip::from_poses(&poses)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let clip = sample_clip(10, 3);
        let bytes = motion_to_bytes(&clip).unwrap();
        let reloaded = motion_from_bytes(&bytes).unwrap();
        let bytes2 = motion_to_bytes(&reloaded).unwrap();
        assert_eq!(bytes, bytes2, "save→load→save must reproduce the payload");
        // In-memory equality is also exact because quaternions are stored
        // verbatim.
        assert_eq!(clip, reloaded);
    }

    #[test]
    fn bad_magic_is_reported() {
        let mut bytes = motion_to_bytes(&sample_clip(1, 1)).unwrap();
        bytes[0] = b'X';
        match motion_from_bytes(&bytes) {
            Err(IoError::BadMagic { expected, found }) => {
                assert_eq!(expected, "MOCP");
                assert_eq!(&found, b"XOCP");
            }
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn bad_version_is_reported_with_offset() {
        let mut bytes = motion_to_bytes(&sample_clip(1, 1)).unwrap();
        bytes[4] = 9;
        match motion_from_bytes(&bytes) {
            Err(IoError::BadVersion {
                expected,
                found,
                offset,
            }) => {
                assert_eq!((expected, found, offset), (1, 9, 4));
            }
            other => panic!("expected BadVersion, got {other:?}"),
        }
    }

    #[test]
    fn truncation_names_expected_and_actual_lengths() {
        let bytes = motion_to_bytes(&sample_clip(2, 2)).unwrap();
        let full = bytes.len() as u64;
        let cut = &bytes[..bytes.len() - 5];
        match motion_from_bytes(cut) {
            Err(IoError::Truncated { expected, actual }) => {
                assert_eq!(expected, full);
                assert_eq!(actual, full - 5);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn nan_payload_is_located_by_byte_offset() {
        let mut bytes = motion_to_bytes(&sample_clip(1, 1)).unwrap();
        // Overwrite the second root-translation float with a NaN.
        let offset = 16 + 8;
        bytes[offset..offset + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        match motion_from_bytes(&bytes) {
            Err(IoError::NonFinite { offset: o }) => assert_eq!(o, offset as u64),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn non_unit_quaternion_is_rejected_with_location() {
        let mut bytes = motion_to_bytes(&sample_clip(2, 2)).unwrap();
        // Frame 1, joint 1: scale its w component far out of band.
        let stride = 3 + 4 * 2;
        let q_base = 16 + 8 * (stride + 3 + 4);
        bytes[q_base..q_base + 8].copy_from_slice(&2.0f64.to_le_bytes());
        match motion_from_bytes(&bytes) {
            Err(IoError::QuaternionNotUnit { frame, joint, .. }) => {
                assert_eq!((frame, joint), (1, 1));
            }
            other => panic!("expected QuaternionNotUnit, got {other:?}"),
        }
    }

    #[test]
    fn quaternion_within_band_is_accepted() {
        let mut clip = sample_clip(1, 1);
        // Perturb the norm by 5e-7, inside the renormalization band.
        for v in &mut clip.frames[0].quaternions_wxyz[0] {
            *v *= 1.0 + 5e-7;
        }
        let bytes = motion_to_bytes(&clip).unwrap();
        let reloaded = motion_from_bytes(&bytes).unwrap();
        // Stored verbatim; renormalization happens at pose conversion.
        assert_eq!(clip, reloaded);
        reloaded.frames[0].to_pose().unwrap();
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = motion_to_bytes(&sample_clip(1, 1)).unwrap();
        bytes.push(0);
        assert!(matches!(
            motion_from_bytes(&bytes),
            Err(IoError::TrailingBytes { expected: 1 })
        ));
    }
}
