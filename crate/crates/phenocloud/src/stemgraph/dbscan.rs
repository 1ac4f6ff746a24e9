//! DBSCAN with a deterministic visit order (ascending point index).

/// Cluster `positions` with DBSCAN. Returns per-point cluster ids
/// (`None` = noise). Points are visited in ascending index order, so
/// cluster ids are assigned deterministically in discovery order.
pub fn dbscan(positions: &[nalgebra::Vector3<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    assert!(eps > 0.0, "eps must be > 0");
    assert!(min_pts >= 1, "min_pts must be >= 1");

    let n = positions.len();
    let eps2 = eps * eps;
    let neighbors_of = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| (positions[i] - positions[j]).norm_squared() <= eps2)
            .collect()
    };

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut cluster = 0usize;

    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = neighbors_of(i);
        if seeds.len() < min_pts {
            continue; // noise unless later absorbed as a border point
        }
        labels[i] = Some(cluster);
        let mut queue: std::collections::VecDeque<usize> = seeds.into();
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nbrs = neighbors_of(j);
            if nbrs.len() >= min_pts {
                for k in nbrs {
                    if !visited[k] || labels[k].is_none() {
                        queue.push_back(k);
                    }
                }
            }
        }
        cluster += 1;
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn blob(center: [f64; 3], n: usize, spread: f64) -> Vec<Vector3<f64>> {
        // deterministic ring-ish blob
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Vector3::new(
                    center[0] + spread * t.cos(),
                    center[1] + spread * t.sin(),
                    center[2],
                )
            })
            .collect()
    }

    #[test]
    fn two_separated_blobs() {
        let mut pts = blob([0.0, 0.0, 0.0], 20, 0.05);
        pts.extend(blob([10.0, 0.0, 0.0], 20, 0.05));
        let labels = dbscan(&pts, 0.2, 4);
        let first: Vec<usize> = labels[..20].iter().map(|l| l.unwrap()).collect();
        let second: Vec<usize> = labels[20..].iter().map(|l| l.unwrap()).collect();
        assert!(first.iter().all(|&l| l == 0));
        assert!(second.iter().all(|&l| l == 1));
    }

    #[test]
    fn single_dense_blob_is_one_cluster() {
        let pts = blob([0.0, 0.0, 0.0], 30, 0.05);
        let labels = dbscan(&pts, 0.2, 4);
        assert!(labels.iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn lone_point_is_noise() {
        let mut pts = blob([0.0, 0.0, 0.0], 20, 0.05);
        pts.push(Vector3::new(100.0, 0.0, 0.0));
        let labels = dbscan(&pts, 0.2, 4);
        assert_eq!(labels[20], None);
    }

    #[test]
    fn cluster_ids_follow_visit_order() {
        let mut pts = blob([10.0, 0.0, 0.0], 10, 0.05);
        pts.extend(blob([0.0, 0.0, 0.0], 10, 0.05));
        let labels = dbscan(&pts, 0.2, 4);
        // the blob containing point 0 gets id 0
        assert_eq!(labels[0], Some(0));
        assert_eq!(labels[10], Some(1));
    }
}
