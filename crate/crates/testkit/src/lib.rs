//! Reference oracles and generators for the occluforge test suites.
//!
//! Everything here is deliberately written from first principles (direct
//! linear solves, per-joint recursion, triple-loop products) so it shares no
//! code path with the implementations it is used to check. Keep it that way:
//! this crate must never depend on the other workspace crates.

use nalgebra::{DMatrix, Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use rand::Rng;

/// Ray/triangle intersection by direct inversion of the 3x3 system
///
/// ```text
/// [-d | v2-v1 | v3-v1] * [t, beta, gamma]^T = r0 - v1
/// ```
///
/// Returns `(t, beta, gamma)` when the system is well conditioned
/// (|det| > `eps`), `t > eps`, and `(beta, gamma)` lies in the closed
/// barycentric simplex. Mirrors the contract of the production
/// Moller-Trumbore routine without sharing any arithmetic with it.
pub fn intersect_linear_solve(
    origin: Vector3<f64>,
    dir: Vector3<f64>,
    v1: Vector3<f64>,
    v2: Vector3<f64>,
    v3: Vector3<f64>,
    eps: f64,
) -> Option<(f64, f64, f64)> {
    let m = Matrix3::from_columns(&[-dir, v2 - v1, v3 - v1]);
    if m.determinant().abs() <= eps {
        return None;
    }
    let inv = m.try_inverse()?;
    let sol = inv * (origin - v1);
    let (t, beta, gamma) = (sol[0], sol[1], sol[2]);
    if t > eps && beta >= 0.0 && gamma >= 0.0 && beta + gamma <= 1.0 {
        Some((t, beta, gamma))
    } else {
        None
    }
}

/// Nearest-hit search by exhaustive scan with the linear-solve intersector.
/// Ties on `t` resolve to the lower triangle index.
pub fn nearest_hit_linear_solve(
    origin: Vector3<f64>,
    dir: Vector3<f64>,
    vertices: &[Vector3<f64>],
    triangles: &[[usize; 3]],
    eps: f64,
) -> Option<(usize, f64, f64, f64)> {
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for (idx, tri) in triangles.iter().enumerate() {
        if let Some((t, b, g)) = intersect_linear_solve(
            origin,
            dir,
            vertices[tri[0]],
            vertices[tri[1]],
            vertices[tri[2]],
            eps,
        ) {
            let better = match best {
                None => true,
                Some((bi, bt, _, _)) => t < bt || (t == bt && idx < bi),
            };
            if better {
                best = Some((idx, t, b, g));
            }
        }
    }
    best
}

/// Geodesic angle between two rotation matrices via the quaternion route,
/// in degrees. Independent of the trace formula used in production.
pub fn quat_geodesic_deg(r1: &Matrix3<f64>, r2: &Matrix3<f64>) -> f64 {
    let q1 = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r1));
    let q2 = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r2));
    q1.angle_to(&q2).to_degrees()
}

/// Product of a chain of matrices by the naive triple loop, applied
/// left-to-right over `mats` so the result is `mats[n-1] * ... * mats[0]`.
pub fn naive_chain_product(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    assert!(!mats.is_empty());
    let n = mats[0].nrows();
    let mut acc = DMatrix::<f64>::identity(n, n);
    for m in mats {
        assert_eq!(m.nrows(), n);
        assert_eq!(m.ncols(), n);
        let mut next = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += m[(i, k)] * acc[(k, j)];
                }
                next[(i, j)] = s;
            }
        }
        acc = next;
    }
    acc
}

/// Global joint positions by walking every joint's ancestor chain from
/// scratch. `parents[0]` must be `None`; the root rest offset is ignored in
/// favour of `root_translation`.
pub fn recursive_fk(
    parents: &[Option<usize>],
    offsets: &[Vector3<f64>],
    rotations: &[Matrix3<f64>],
    root_translation: Vector3<f64>,
) -> Vec<Vector3<f64>> {
    fn global(
        j: usize,
        parents: &[Option<usize>],
        offsets: &[Vector3<f64>],
        rotations: &[Matrix3<f64>],
        root_t: Vector3<f64>,
    ) -> (Matrix3<f64>, Vector3<f64>) {
        match parents[j] {
            None => (rotations[j], root_t),
            Some(p) => {
                let (pr, pt) = global(p, parents, offsets, rotations, root_t);
                (pr * rotations[j], pt + pr * offsets[j])
            }
        }
    }
    (0..parents.len())
        .map(|j| global(j, parents, offsets, rotations, root_translation).1)
        .collect()
}

/// Uniformly random rotation matrix from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q = nalgebra::Quaternion::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        if q.norm() > 1e-3 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        }
    }
}

/// Rotation of `angle_deg` about a random axis.
pub fn random_rotation_with_angle<R: Rng>(rng: &mut R, angle_deg: f64) -> Matrix3<f64> {
    let axis = loop {
        let v = Vector3::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        if v.norm() > 1e-3 {
            break Unit::new_normalize(v);
        }
    };
    Rotation3::from_axis_angle(&axis, angle_deg.to_radians()).into_inner()
}

pub fn random_vector<R: Rng>(rng: &mut R, scale: f64) -> Vector3<f64> {
    Vector3::new(
        (rng.gen::<f64>() * 2.0 - 1.0) * scale,
        (rng.gen::<f64>() * 2.0 - 1.0) * scale,
        (rng.gen::<f64>() * 2.0 - 1.0) * scale,
    )
}

/// Random triangle with vertices in `[-scale, scale]^3`, rejecting areas
/// below `min_area` so the oracle's 3x3 solve stays well conditioned.
pub fn random_triangle<R: Rng>(rng: &mut R, scale: f64, min_area: f64) -> [Vector3<f64>; 3] {
    loop {
        let v1 = random_vector(rng, scale);
        let v2 = random_vector(rng, scale);
        let v3 = random_vector(rng, scale);
        let area = 0.5 * (v2 - v1).cross(&(v3 - v1)).norm();
        if area > min_area {
            return [v1, v2, v3];
        }
    }
}

/// Ray from a shell around the origin aimed at a random point of the cube
/// `[-1, 1]^3`, so a healthy fraction of queries actually hit geometry there.
pub fn random_ray_toward_cube<R: Rng>(rng: &mut R, shell_radius: f64) -> (Vector3<f64>, Vector3<f64>) {
    let origin = loop {
        let v = random_vector(rng, 1.0);
        if v.norm() > 1e-3 {
            break v.normalize() * shell_radius;
        }
    };
    let target = random_vector(rng, 1.0);
    let dir = (target - origin).normalize();
    (origin, dir)
}

/// Random row-stochastic matrix (rows strictly positive, summing to 1).
pub fn random_row_stochastic<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = rng.gen::<f64>() + 1e-6;
            m[(i, j)] = v;
            sum += v;
        }
        for j in 0..n {
            m[(i, j)] /= sum;
        }
    }
    m
}

/// Lat/long sphere mesh, for occluder tests that need a known convex body.
pub fn uv_sphere(n_lat: usize, n_lon: usize, radius: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    assert!(n_lat >= 2 && n_lon >= 3);
    let mut verts = Vec::new();
    verts.push(Vector3::new(0.0, 0.0, radius)); // north pole
    for i in 1..n_lat {
        let phi = std::f64::consts::PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_lon as f64;
            verts.push(Vector3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    verts.push(Vector3::new(0.0, 0.0, -radius)); // south pole
    let south = verts.len() - 1;

    let ring = |i: usize, j: usize| 1 + (i - 1) * n_lon + (j % n_lon);
    let mut tris = Vec::new();
    for j in 0..n_lon {
        tris.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            tris.push([a, c, b]);
            tris.push([b, c, d]);
        }
    }
    for j in 0..n_lon {
        tris.push([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)]);
    }
    (verts, tris)
}
