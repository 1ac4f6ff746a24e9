//! k-d tree over point positions for nearest-neighbor queries.
//!
//! Results are identical to an exhaustive scan sorted by
//! (distance, point id): ties are broken by the lower id.

use nalgebra::Vector3;

use crate::error::{Error, Result};

use super::PointCloud;

#[derive(Debug, Clone)]
struct Node {
    /// Point id at this node (median along the split axis).
    id: usize,
    axis: usize,
    left: Option<Box<Node>>,
    right: Option<Box<Node>>,
}

/// Immutable spatial index over a fixed set of positions.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    positions: Vec<Vector3<f64>>,
    root: Option<Box<Node>>,
}

/// Candidate ordering: distance ascending, then id ascending.
fn closer(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        Self::from_positions(cloud.positions().collect())
    }

    pub fn from_positions(positions: Vec<Vector3<f64>>) -> Self {
        let mut ids: Vec<usize> = (0..positions.len()).collect();
        let root = build_node(&positions, &mut ids, 0);
        SpatialIndex { positions, root }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: usize) -> Vector3<f64> {
        self.positions[id]
    }

    /// The k nearest points to `query`, sorted by ascending distance
    /// (ties by lower id). Errors if `k` exceeds the indexed count.
    pub fn knn(&self, query: &Vector3<f64>, k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.positions.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds indexed point count {}",
                self.positions.len()
            )));
        }
        if k == 0 {
            return Ok(vec![]);
        }
        // Bounded worst-candidate set, worst kept at index 0.
        let mut heap: Vec<(f64, usize)> = Vec::with_capacity(k);
        self.search(self.root.as_deref(), query, k, &mut heap);
        heap.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        Ok(heap.into_iter().map(|(d, id)| (id, d.sqrt())).collect())
    }

    /// Nearest indexed point to `query`. Panics on an empty index.
    pub fn nearest(&self, query: &Vector3<f64>) -> (usize, f64) {
        self.knn(query, 1).expect("index is non-empty")[0]
    }

    fn search(
        &self,
        node: Option<&Node>,
        query: &Vector3<f64>,
        k: usize,
        heap: &mut Vec<(f64, usize)>,
    ) {
        let Some(node) = node else { return };
        let p = self.positions[node.id];
        let d2 = (p - query).norm_squared();
        if heap.len() < k {
            heap.push((d2, node.id));
            heap.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
        } else if closer((d2, node.id), heap[0]) {
            heap[0] = (d2, node.id);
            heap.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
        }

        let delta = query[node.axis] - p[node.axis];
        let (near, far) = if delta <= 0.0 {
            (node.left.as_deref(), node.right.as_deref())
        } else {
            (node.right.as_deref(), node.left.as_deref())
        };
        self.search(near, query, k, heap);
        // Visit the far side on equality too: an equidistant point with a
        // lower id may live there.
        if heap.len() < k || delta * delta <= heap[0].0 {
            self.search(far, query, k, heap);
        }
    }
}

fn build_node(positions: &[Vector3<f64>], ids: &mut [usize], depth: usize) -> Option<Box<Node>> {
    if ids.is_empty() {
        return None;
    }
    let axis = depth % 3;
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| {
        positions[a][axis]
            .partial_cmp(&positions[b][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let id = ids[mid];
    let (left_ids, rest) = ids.split_at_mut(mid);
    let right_ids = &mut rest[1..];
    Some(Box::new(Node {
        id,
        axis,
        left: build_node(positions, left_ids, depth + 1),
        right: build_node(positions, right_ids, depth + 1),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Point;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn brute_knn(points: &[Vector3<f64>], query: &Vector3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - query).norm()))
            .collect();
        all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn query_on_indexed_point_is_distance_zero() {
        let cloud = PointCloud::new(vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 2.0, 3.0),
            Point::new(-1.0, 0.5, 2.0),
        ]);
        let index = SpatialIndex::build(&cloud);
        let got = index.knn(&Vector3::new(1.0, 2.0, 3.0), 1).unwrap();
        assert_eq!(got, vec![(1, 0.0)]);
    }

    #[test]
    fn collinear_points_in_order() {
        let cloud = PointCloud::new(vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
        ]);
        let index = SpatialIndex::build(&cloud);
        let got = index.knn(&Vector3::new(0.0, 0.0, 0.0), 2).unwrap();
        assert_eq!(got[0].0, 0);
        assert_eq!(got[1].0, 1);
    }

    #[test]
    fn k_larger_than_count_errors() {
        let cloud = PointCloud::new(vec![Point::new(0.0, 0.0, 0.0)]);
        let index = SpatialIndex::build(&cloud);
        assert!(matches!(
            index.knn(&Vector3::zeros(), 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn matches_linear_scan_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let positions: Vec<Vector3<f64>> = (0..500)
            .map(|_| Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let index = SpatialIndex::from_positions(positions.clone());
        for _ in 0..50 {
            let q = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            let got = index.knn(&q, 10).unwrap();
            let want = brute_knn(&positions, &q, 10);
            let got_ids: Vec<usize> = got.iter().map(|g| g.0).collect();
            let want_ids: Vec<usize> = want.iter().map(|w| w.0).collect();
            assert_eq!(got_ids, want_ids);
        }
    }

    #[test]
    fn tie_break_prefers_lower_id() {
        // Four points at the same distance from the origin query.
        let cloud = PointCloud::new(vec![
            Point::new(1.0, 0.0, 0.0),
            Point::new(-1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
        ]);
        let index = SpatialIndex::build(&cloud);
        let got = index.knn(&Vector3::zeros(), 2).unwrap();
        assert_eq!(got.iter().map(|g| g.0).collect::<Vec<_>>(), vec![0, 1]);
    }
}
