//! Bounding volume hierarchy over mesh triangles for nearest-hit queries.

use crate::SimError;
use occluforge_core::geometry::INTERSECT_EPS;
use occluforge_core::{ray_triangle_intersect, Hit, Ray, Triangle, Vec3};
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Vec3::from_element(f64::INFINITY),
            max: Vec3::from_element(f64::NEG_INFINITY),
        }
    }

    fn grow_point(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn grow_triangle(&mut self, t: &Triangle) {
        self.grow_point(&t.v1);
        self.grow_point(&t.v2);
        self.grow_point(&t.v3);
    }

    /// Slab test. `inv_dir` carries ±inf for zero components, which the
    /// min/max arithmetic handles without branches. A hit farther than
    /// `max_t` is treated as a miss so traversal can prune against the best
    /// hit found so far.
    fn hit_by(&self, origin: &Vec3, inv_dir: &Vec3, max_t: f64) -> bool {
        let mut t_near = 0.0f64;
        let mut t_far = max_t;
        for axis in 0..3 {
            let t1 = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let t2 = (self.max[axis] - origin[axis]) * inv_dir[axis];
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            // NaN from 0 * inf means the ray is parallel to and inside the
            // slab; skip the axis (treat as unbounded).
            if lo.is_nan() || hi.is_nan() {
                continue;
            }
            t_near = t_near.max(lo);
            t_far = t_far.min(hi);
            if t_near > t_far {
                return false;
            }
        }
        true
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        bounds: Aabb,
        /// Range into `BvhAccel::order`.
        start: usize,
        len: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

/// Median-split BVH. Triangles are referenced by their index in the original
/// mesh so nearest-hit results are comparable with a brute-force scan,
/// including the tie rule (equal `t` resolves to the lower triangle index).
#[derive(Debug)]
pub struct BvhAccel {
    triangles: Vec<Triangle>,
    nodes: Vec<Node>,
    /// Permutation of triangle indices; leaves own contiguous slices.
    order: Vec<usize>,
    root: usize,
    /// Triangle intersection tests performed by queries on this tree.
    /// Atomic so queries stay `&self` and trees can cross thread boundaries.
    tests: AtomicU64,
}

const DEFAULT_MAX_LEAF: usize = 8;

impl BvhAccel {
    pub fn build(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Result<Self, SimError> {
        Self::build_with_leaf_size(vertices, triangles, DEFAULT_MAX_LEAF)
    }

    pub fn build_with_leaf_size(
        vertices: &[Vec3],
        triangles: &[[usize; 3]],
        max_leaf: usize,
    ) -> Result<Self, SimError> {
        if triangles.is_empty() {
            return Err(SimError::EmptyMesh);
        }
        let tris: Vec<Triangle> = triangles
            .iter()
            .map(|t| Triangle {
                v1: vertices[t[0]],
                v2: vertices[t[1]],
                v3: vertices[t[2]],
            })
            .collect();
        let centroids: Vec<Vec3> = tris
            .iter()
            .map(|t| (t.v1 + t.v2 + t.v3) / 3.0)
            .collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::new();
        let root = split(
            &tris,
            &centroids,
            &mut order,
            0,
            tris.len(),
            max_leaf.max(1),
            &mut nodes,
        );
        Ok(BvhAccel {
            triangles: tris,
            nodes,
            order,
            root,
            tests: AtomicU64::new(0),
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_is_leaf(&self) -> bool {
        matches!(self.nodes[self.root], Node::Leaf { .. })
    }

    /// Triangle intersection tests performed since construction or the last
    /// `reset_test_counter`.
    pub fn triangle_tests(&self) -> u64 {
        self.tests.load(Ordering::Relaxed)
    }

    pub fn reset_test_counter(&self) {
        self.tests.store(0, Ordering::Relaxed);
    }

    /// Nearest intersection along the ray: `(triangle index, hit)`. Equal
    /// distances resolve to the lower triangle index, matching a brute-force
    /// scan in ascending index order.
    pub fn nearest_hit(&self, ray: &Ray) -> Option<(usize, Hit)> {
        let dir = ray.direction();
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<(usize, Hit)> = None;
        let mut stack = vec![self.root];
        let mut tested = 0u64;
        while let Some(node) = stack.pop() {
            let max_t = best.as_ref().map_or(f64::INFINITY, |(_, h)| h.t);
            match &self.nodes[node] {
                Node::Leaf { bounds, start, len } => {
                    if !bounds.hit_by(&ray.origin, &inv_dir, max_t) {
                        continue;
                    }
                    for &tri_idx in &self.order[*start..*start + *len] {
                        tested += 1;
                        if let Some(hit) =
                            ray_triangle_intersect(ray, &self.triangles[tri_idx], INTERSECT_EPS)
                        {
                            let better = match &best {
                                None => true,
                                Some((bi, bh)) => {
                                    hit.t < bh.t || (hit.t == bh.t && tri_idx < *bi)
                                }
                            };
                            if better {
                                best = Some((tri_idx, hit));
                            }
                        }
                    }
                }
                Node::Inner {
                    bounds,
                    left,
                    right,
                } => {
                    if bounds.hit_by(&ray.origin, &inv_dir, max_t) {
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
        }
        self.tests.fetch_add(tested, Ordering::Relaxed);
        best
    }

    /// True when some triangle lies strictly within `max_t` along the ray
    /// (used for shadow-style queries; early-outs on the first such hit).
    pub fn any_hit_before(&self, ray: &Ray, max_t: f64) -> bool {
        let dir = ray.direction();
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![self.root];
        let mut tested = 0u64;
        let mut found = false;
        'outer: while let Some(node) = stack.pop() {
            match &self.nodes[node] {
                Node::Leaf { bounds, start, len } => {
                    if !bounds.hit_by(&ray.origin, &inv_dir, max_t) {
                        continue;
                    }
                    for &tri_idx in &self.order[*start..*start + *len] {
                        tested += 1;
                        if let Some(hit) =
                            ray_triangle_intersect(ray, &self.triangles[tri_idx], INTERSECT_EPS)
                        {
                            if hit.t < max_t {
                                found = true;
                                break 'outer;
                            }
                        }
                    }
                }
                Node::Inner {
                    bounds,
                    left,
                    right,
                } => {
                    if bounds.hit_by(&ray.origin, &inv_dir, max_t) {
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
        }
        self.tests.fetch_add(tested, Ordering::Relaxed);
        found
    }
}

fn split(
    tris: &[Triangle],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    len: usize,
    max_leaf: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    for &i in &order[start..start + len] {
        bounds.grow_triangle(&tris[i]);
    }
    if len <= max_leaf {
        nodes.push(Node::Leaf { bounds, start, len });
        return nodes.len() - 1;
    }
    // Split on the widest axis of the centroid bounds at the median.
    let mut cb = Aabb::empty();
    for &i in &order[start..start + len] {
        cb.grow_point(&centroids[i]);
    }
    let extent = cb.max - cb.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let slice = &mut order[start..start + len];
    slice.sort_unstable_by(|&a, &b| {
        centroids[a][axis]
            .partial_cmp(&centroids[b][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let half = len / 2;
    let left = split(tris, centroids, order, start, half, max_leaf, nodes);
    let right = split(tris, centroids, order, start + half, len - half, max_leaf, nodes);
    nodes.push(Node::Inner {
        bounds,
        left,
        right,
    });
    nodes.len() - 1
}

/// Brute-force nearest hit over all triangles, ascending index order, with
/// the same tie rule as the BVH. The reference the tree is tested against.
pub fn nearest_hit_brute(ray: &Ray, triangles: &[Triangle]) -> Option<(usize, Hit)> {
    let mut best: Option<(usize, Hit)> = None;
    for (i, tri) in triangles.iter().enumerate() {
        if let Some(hit) = ray_triangle_intersect(ray, tri, INTERSECT_EPS) {
            let better = match &best {
                None => true,
                Some((_, bh)) => hit.t < bh.t,
            };
            if better {
                best = Some((i, hit));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let vertices = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
        ];
        (vertices, vec![[0, 1, 2], [0, 2, 3]])
    }

    #[test]
    fn single_triangle_tree_is_a_leaf() {
        let (v, t) = quad();
        let bvh = BvhAccel::build(&v, &t[..1]).unwrap();
        assert_eq!(bvh.node_count(), 1);
        assert!(bvh.root_is_leaf());
    }

    #[test]
    fn empty_mesh_is_rejected() {
        assert_eq!(BvhAccel::build(&[], &[]).unwrap_err(), SimError::EmptyMesh);
    }

    #[test]
    fn ray_missing_the_root_box_tests_no_triangles() {
        let (v, t) = quad();
        let bvh = BvhAccel::build(&v, &t).unwrap();
        let ray = Ray::new(Vec3::new(10.0, 10.0, 1.0), Vec3::new(0.0, 0.0, -1.0));
        assert!(bvh.nearest_hit(&ray).is_none());
        assert_eq!(bvh.triangle_tests(), 0);
    }

    #[test]
    fn hit_through_the_quad_matches_brute_force() {
        let (v, t) = quad();
        let bvh = BvhAccel::build(&v, &t).unwrap();
        let tris: Vec<Triangle> = t
            .iter()
            .map(|t| Triangle { v1: v[t[0]], v2: v[t[1]], v3: v[t[2]] })
            .collect();
        let ray = Ray::new(Vec3::new(0.2, -0.3, 5.0), Vec3::new(0.0, 0.0, -1.0));
        let (bi, bh) = bvh.nearest_hit(&ray).unwrap();
        let (fi, fh) = nearest_hit_brute(&ray, &tris).unwrap();
        assert_eq!(bi, fi);
        assert_eq!(bh.t, fh.t);
    }

    #[test]
    fn coincident_triangles_resolve_to_the_lower_index() {
        // two identical triangles; both hit at the same t
        let vertices = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let triangles = vec![[0, 1, 2], [0, 1, 2]];
        let bvh = BvhAccel::build_with_leaf_size(&vertices, &triangles, 1).unwrap();
        let ray = Ray::new(Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.0, 0.0, -1.0));
        let (idx, _) = bvh.nearest_hit(&ray).unwrap();
        assert_eq!(idx, 0);
    }
}
