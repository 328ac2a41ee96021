//! Point clouds and the KD-tree index used for nearest-neighbor surface
//! queries.
//!
//! The index is a snapshot: it copies the cloud at build time and is never
//! updated. Query results are defined to be identical to an exhaustive linear
//! scan, with ties between equidistant points broken by the lowest point
//! index.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Which frame a cloud's coordinates are expressed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameId {
    #[default]
    World,
    Sensor,
}

/// An ordered set of 3D points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub frame_id: FrameId,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points, frame_id: FrameId::World }
    }

    pub fn with_frame(points: Vec<Vec3>, frame_id: FrameId) -> Self {
        PointCloud { points, frame_id }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Drop non-finite points in place, returning how many were removed.
    pub fn retain_finite(&mut self) -> usize {
        let before = self.points.len();
        self.points.retain(|p| p.is_finite());
        before - self.points.len()
    }

    /// Axis-aligned bounds, or `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points[1..] {
            lo = lo.min(*p);
            hi = hi.max(*p);
        }
        Some((lo, hi))
    }
}

/// Result of a nearest-neighbor query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub point: Vec3,
    pub distance: f64,
    pub point_id: usize,
}

const LEAF_SIZE: usize = 16;

enum KdNode {
    Leaf { start: u32, len: u32 },
    Inner { axis: u8, split: f64, left: u32, right: u32 },
}

/// Balanced KD-tree over a snapshot of a point cloud.
pub struct KdIndex {
    points: Vec<Vec3>,
    order: Vec<u32>,
    nodes: Vec<KdNode>,
    root: u32,
}

impl KdIndex {
    /// Build an index over the cloud's points. The cloud itself is copied and
    /// left untouched.
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let points = cloud.points.clone();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = build_node(&points, &mut order, 0, points.len(), &mut nodes);
        Ok(KdIndex { points, order, nodes, root })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point to `query` by Euclidean distance; equidistant candidates
    /// resolve to the lowest point index.
    pub fn nearest_neighbor(&self, query: Vec3) -> Neighbor {
        let mut best_d2 = f64::INFINITY;
        let mut best_id = u32::MAX;
        self.search(self.root, query, &mut best_d2, &mut best_id);
        let point = self.points[best_id as usize];
        Neighbor { point, distance: best_d2.sqrt(), point_id: best_id as usize }
    }

    fn search(&self, node: u32, query: Vec3, best_d2: &mut f64, best_id: &mut u32) {
        match self.nodes[node as usize] {
            KdNode::Leaf { start, len } => {
                for &id in &self.order[start as usize..(start + len) as usize] {
                    let d2 = self.points[id as usize].distance_squared(query);
                    if d2 < *best_d2 || (d2 == *best_d2 && id < *best_id) {
                        *best_d2 = d2;
                        *best_id = id;
                    }
                }
            }
            KdNode::Inner { axis, split, left, right } => {
                let delta = query.axis(axis as usize) - split;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, best_d2, best_id);
                // Visit the far side on exact ties as well, so the
                // lowest-index rule sees every equidistant candidate.
                if delta * delta <= *best_d2 {
                    self.search(far, query, best_d2, best_id);
                }
            }
        }
    }
}

fn build_node(
    points: &[Vec3],
    order: &mut [u32],
    start: usize,
    len: usize,
    nodes: &mut Vec<KdNode>,
) -> u32 {
    if len <= LEAF_SIZE {
        nodes.push(KdNode::Leaf { start: start as u32, len: len as u32 });
        return (nodes.len() - 1) as u32;
    }

    let slice = &mut order[start..start + len];
    let mut lo = points[slice[0] as usize];
    let mut hi = lo;
    for &id in slice.iter() {
        let p = points[id as usize];
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let extent = hi - lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };

    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        let ca = points[a as usize].axis(axis);
        let cb = points[b as usize].axis(axis);
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    let split = points[slice[mid] as usize].axis(axis);

    let placeholder = nodes.len();
    nodes.push(KdNode::Leaf { start: 0, len: 0 });
    let left = build_node(points, order, start, mid, nodes);
    let right = build_node(points, order, start + mid, len - mid, nodes);
    nodes[placeholder] = KdNode::Inner { axis: axis as u8, split, left, right };
    placeholder as u32
}

/// Uniform random subset of exactly `target_count` points, reproducible from
/// `seed`. Clouds at or below the target are returned unchanged.
pub fn downsample(cloud: &PointCloud, target_count: usize, seed: u64) -> Result<PointCloud> {
    if target_count < 1 {
        return Err(Error::InvalidTarget(target_count));
    }
    let n = cloud.len();
    if n <= target_count {
        return Ok(cloud.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<u32> = (0..n as u32).collect();
    // Partial Fisher-Yates: the first target_count slots end up holding a
    // uniform sample without replacement.
    for i in 0..target_count {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut chosen = indices[..target_count].to_vec();
    chosen.sort_unstable();
    let points = chosen.iter().map(|&i| cloud.points[i as usize]).collect();
    Ok(PointCloud::with_frame(points, cloud.frame_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: exhaustive scan with the same tie-break rule.
    fn linear_nearest(points: &[Vec3], query: Vec3) -> Neighbor {
        let mut best_d2 = f64::INFINITY;
        let mut best_id = usize::MAX;
        for (id, p) in points.iter().enumerate() {
            let dx = p.x - query.x;
            let dy = p.y - query.y;
            let dz = p.z - query.z;
            let d2 = dx * dx + dy * dy + dz * dz;
            if d2 < best_d2 {
                best_d2 = d2;
                best_id = id;
            }
        }
        Neighbor { point: points[best_id], distance: best_d2.sqrt(), point_id: best_id }
    }

    fn cloud_from_seed(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(0.0..100.0),
                    rng.random_range(0.0..100.0),
                    rng.random_range(0.0..100.0),
                )
            })
            .collect();
        PointCloud::new(points)
    }

    #[test]
    fn singleton_cloud_always_answers_its_point() {
        let cloud = PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)]);
        let index = KdIndex::build(&cloud).unwrap();
        let nn = index.nearest_neighbor(Vec3::new(50.0, -3.0, 0.25));
        assert_eq!(nn.point, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(nn.point_id, 0);
    }

    #[test]
    fn empty_cloud_is_rejected() {
        let err = KdIndex::build(&PointCloud::new(vec![])).unwrap_err();
        assert!(matches!(err, Error::EmptyCloud));
    }

    #[test]
    fn two_point_query_returns_closest() {
        let cloud = PointCloud::new(vec![Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)]);
        let index = KdIndex::build(&cloud).unwrap();
        let nn = index.nearest_neighbor(Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(nn.point, Vec3::ZERO);
        assert_eq!(nn.distance, 1.0);
        assert_eq!(nn.point_id, 0);
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_index() {
        let cloud = PointCloud::new(vec![
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(-2.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
        ]);
        let index = KdIndex::build(&cloud).unwrap();
        let nn = index.nearest_neighbor(Vec3::ZERO);
        assert_eq!(nn.point_id, 0);

        // Reversed order must flip the winner.
        let cloud = PointCloud::new(vec![Vec3::new(-2.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)]);
        let index = KdIndex::build(&cloud).unwrap();
        assert_eq!(index.nearest_neighbor(Vec3::ZERO).point_id, 0);
    }

    #[test]
    fn matches_linear_scan_on_random_clouds() {
        let cloud = cloud_from_seed(1000, 11);
        let index = KdIndex::build(&cloud).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let q = Vec3::new(
                rng.random_range(-10.0..110.0),
                rng.random_range(-10.0..110.0),
                rng.random_range(-10.0..110.0),
            );
            let got = index.nearest_neighbor(q);
            let want = linear_nearest(&cloud.points, q);
            assert_eq!(got.point_id, want.point_id);
            assert_eq!(got.distance, want.distance);
        }
    }

    #[test]
    fn matches_linear_scan_on_gridded_clouds_with_ties() {
        // Regular grid forces exact distance ties.
        let mut points = Vec::new();
        for x in 0..6 {
            for y in 0..6 {
                for z in 0..6 {
                    points.push(Vec3::new(x as f64, y as f64, z as f64));
                }
            }
        }
        let cloud = PointCloud::new(points);
        let index = KdIndex::build(&cloud).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            // Half-integer queries sit equidistant from up to 8 grid points.
            let q = Vec3::new(
                rng.random_range(0..11) as f64 * 0.5,
                rng.random_range(0..11) as f64 * 0.5,
                rng.random_range(0..11) as f64 * 0.5,
            );
            let got = index.nearest_neighbor(q);
            let want = linear_nearest(&cloud.points, q);
            assert_eq!(got.point_id, want.point_id, "query {q:?}");
        }
    }

    #[test]
    fn build_leaves_cloud_unmodified() {
        let cloud = cloud_from_seed(200, 3);
        let copy = cloud.clone();
        let index = KdIndex::build(&cloud).unwrap();
        let _ = index.nearest_neighbor(Vec3::ZERO);
        assert_eq!(cloud, copy);
    }

    #[test]
    fn downsample_returns_small_clouds_unchanged() {
        let cloud = cloud_from_seed(10, 4);
        let out = downsample(&cloud, 20, 99).unwrap();
        assert_eq!(out, cloud);
    }

    #[test]
    fn downsample_is_deterministic_per_seed() {
        let cloud = cloud_from_seed(1000, 4);
        let a = downsample(&cloud, 100, 7).unwrap();
        let b = downsample(&cloud, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        let c = downsample(&cloud, 100, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn downsample_rejects_zero_target() {
        let cloud = cloud_from_seed(10, 4);
        assert!(matches!(downsample(&cloud, 0, 1), Err(Error::InvalidTarget(0))));
    }

    #[test]
    fn downsample_preserves_bounding_box_of_uniform_cube() {
        // Monte Carlo check: a 10% subsample of a uniform cube keeps the
        // bounding box within 5% per axis.
        let cloud = cloud_from_seed(20_000, 21);
        let out = downsample(&cloud, 2000, 22).unwrap();
        let (lo, hi) = out.bounds().unwrap();
        for axis in 0..3 {
            assert!(lo.axis(axis) < 5.0, "axis {axis} lo {}", lo.axis(axis));
            assert!(hi.axis(axis) > 95.0, "axis {axis} hi {}", hi.axis(axis));
        }
    }

    proptest! {
        #[test]
        fn kd_equals_linear_scan(
            points in proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64), 1..400),
            query in (-60.0..60.0f64, -60.0..60.0f64, -60.0..60.0f64),
        ) {
            let cloud = PointCloud::new(points.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect());
            let index = KdIndex::build(&cloud).unwrap();
            let q = Vec3::new(query.0, query.1, query.2);
            let got = index.nearest_neighbor(q);
            let want = linear_nearest(&cloud.points, q);
            prop_assert_eq!(got.point_id, want.point_id);
            prop_assert_eq!(got.distance.to_bits(), want.distance.to_bits());
        }
    }
}
