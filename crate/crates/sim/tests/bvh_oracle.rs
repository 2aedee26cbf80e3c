//! BVH correctness against brute force and an independent linear-solve
//! oracle on a dense sphere mesh.

use occluforge_core::{Ray, Triangle, Vec3};
use occluforge_sim::{nearest_hit_brute, BvhAccel};
use occluforge_testkit as oracle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere_2000() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    // 26 latitude bands x 40 longitudes = exactly 2,000 triangles
    let (v, t) = oracle::uv_sphere(26, 40, 1.0);
    assert_eq!(t.len(), 2_000);
    (v, t)
}

#[test]
fn nearest_hit_matches_brute_force_on_10k_rays() {
    let (vertices, triangles) = sphere_2000();
    let bvh = BvhAccel::build(&vertices, &triangles).unwrap();
    let tris: Vec<Triangle> = triangles
        .iter()
        .map(|t| Triangle { v1: vertices[t[0]], v2: vertices[t[1]], v3: vertices[t[2]] })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b51);
    let mut hits = 0usize;
    for _ in 0..10_000 {
        let (origin, dir) = oracle::random_ray_toward_cube(&mut rng, 3.0);
        let ray = Ray::new(origin, dir);
        match (bvh.nearest_hit(&ray), nearest_hit_brute(&ray, &tris)) {
            (None, None) => {}
            (Some((bi, bh)), Some((fi, fh))) => {
                hits += 1;
                assert_eq!(bi, fi, "triangle index must match bit-for-bit");
                assert!((bh.t - fh.t).abs() <= 1e-12, "t drifted: {} vs {}", bh.t, fh.t);
            }
            (a, b) => panic!("hit/miss disagreement: bvh={a:?} brute={b:?}"),
        }
    }
    assert!(hits > 2_000, "only {hits}/10000 rays hit the sphere");
}

#[test]
fn traversal_prunes_at_least_5x_fewer_triangle_tests() {
    let (vertices, triangles) = sphere_2000();
    let bvh = BvhAccel::build(&vertices, &triangles).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b52);
    bvh.reset_test_counter();
    let queries = 10_000u64;
    for _ in 0..queries {
        let (origin, dir) = oracle::random_ray_toward_cube(&mut rng, 3.0);
        bvh.nearest_hit(&Ray::new(origin, dir));
    }
    let brute_tests = queries * triangles.len() as u64;
    let bvh_tests = bvh.triangle_tests();
    assert!(
        bvh_tests * 5 <= brute_tests,
        "BVH performed {bvh_tests} triangle tests, brute force would do {brute_tests}"
    );
}

#[test]
fn nearest_hit_agrees_with_the_linear_solve_oracle() {
    // End-to-end cross-check against arithmetic that shares nothing with
    // the production intersector: exhaustive scan + 3x3 matrix inversion.
    let (vertices, triangles) = sphere_2000();
    let bvh = BvhAccel::build(&vertices, &triangles).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b53);
    for _ in 0..2_000 {
        let (origin, dir) = oracle::random_ray_toward_cube(&mut rng, 3.0);
        let ours = bvh.nearest_hit(&Ray::new(origin, dir));
        let reference =
            oracle::nearest_hit_linear_solve(origin, dir, &vertices, &triangles, 1e-12);
        match (ours, reference) {
            (None, None) => {}
            (Some((bi, bh)), Some((oi, ot, _, _))) => {
                assert_eq!(bi, oi);
                assert!((bh.t - ot).abs() < 1e-9, "t drifted: {} vs {ot}", bh.t);
            }
            (a, b) => panic!("hit/miss disagreement: bvh={a:?} oracle={b:?}"),
        }
    }
}

#[test]
fn deep_tree_still_visits_every_triangle_exactly_once() {
    // leaf size 1 forces maximal depth; results still match brute force
    let (vertices, triangles) = sphere_2000();
    let bvh = BvhAccel::build_with_leaf_size(&vertices, &triangles, 1).unwrap();
    let tris: Vec<Triangle> = triangles
        .iter()
        .map(|t| Triangle { v1: vertices[t[0]], v2: vertices[t[1]], v3: vertices[t[2]] })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b54);
    for _ in 0..1_000 {
        let (origin, dir) = oracle::random_ray_toward_cube(&mut rng, 3.0);
        let ray = Ray::new(origin, dir);
        let a = bvh.nearest_hit(&ray).map(|(i, h)| (i, h.t));
        let b = nearest_hit_brute(&ray, &tris).map(|(i, h)| (i, h.t));
        assert_eq!(a, b);
    }
}
