//! Minimal Wavefront OBJ support: `v` and `f` records only. Faces with more
//! than three vertices are fan-triangulated; `f` entries of the form
//! `i/t/n` keep only the vertex index. Every other record type (normals,
//! texture coordinates, groups, materials, comments) is skipped and counted
//! so callers can surface a warning.

use crate::{atomic_write, IoError};
use occluforge_core::Vec3;
use std::path::Path;

/// Geometry parsed from an OBJ file, with a count of skipped records.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Non-empty records that were neither `v` nor `f`.
    pub skipped_records: usize,
}

/// Parses the `v`/`f` subset from OBJ text.
pub fn obj_from_str(text: &str, path: &Path) -> Result<ObjMesh, IoError> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut skipped_records = 0usize;
    let record_err = |line: usize, message: String| IoError::ObjRecord {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().expect("non-empty line has a first token");
        match tag {
            "v" => {
                let mut coords = [0.0f64; 3];
                for (k, slot) in coords.iter_mut().enumerate() {
                    let token = parts.next().ok_or_else(|| {
                        record_err(line_no, format!("vertex needs 3 coordinates, found {k}"))
                    })?;
                    *slot = token.parse().map_err(|_| {
                        record_err(line_no, format!("bad coordinate {token:?}"))
                    })?;
                }
                // An optional fourth (w) component is permitted and ignored.
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut face: Vec<usize> = Vec::new();
                for token in parts {
                    let vertex_part = token.split('/').next().unwrap_or(token);
                    let one_based: i64 = vertex_part.parse().map_err(|_| {
                        record_err(line_no, format!("bad face index {token:?}"))
                    })?;
                    if one_based < 1 {
                        return Err(record_err(
                            line_no,
                            format!("face index {one_based} is not positive; relative indices are unsupported"),
                        ));
                    }
                    let zero_based = (one_based - 1) as usize;
                    if zero_based >= vertices.len() {
                        return Err(record_err(
                            line_no,
                            format!(
                                "face references vertex {one_based} but only {} are defined",
                                vertices.len()
                            ),
                        ));
                    }
                    face.push(zero_based);
                }
                if face.len() < 3 {
                    return Err(record_err(
                        line_no,
                        format!("face needs at least 3 vertices, found {}", face.len()),
                    ));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => skipped_records += 1,
        }
    }
    Ok(ObjMesh {
        vertices,
        triangles,
        skipped_records,
    })
}

/// Renders vertices and triangles as OBJ text (1-based indices).
pub fn obj_to_string(vertices: &[Vec3], triangles: &[[usize; 3]]) -> String {
    let mut out = String::new();
    for v in vertices {
        out.push_str(&format!("v {:.16e} {:.16e} {:.16e}\n", v.x, v.y, v.z));
    }
    for t in triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

pub fn load_obj(path: &Path) -> Result<ObjMesh, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    obj_from_str(&text, path)
}

pub fn save_obj(path: &Path, vertices: &[Vec3], triangles: &[[usize; 3]]) -> Result<(), IoError> {
    atomic_write(path, obj_to_string(vertices, triangles).as_bytes())
}
