//! Incremental 3D convex hull.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Convex hull of a 3D point set: outward-oriented triangular facets
/// over a copy of the input positions.
#[derive(Debug, Clone)]
pub struct Hull3 {
    points: Vec<Vector3<f64>>,
    facets: Vec<[usize; 3]>,
}

impl Hull3 {
    /// Outward-oriented facets as index triples into [`Hull3::points`].
    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Ids of points that lie on the hull.
    pub fn vertex_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.facets.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Hull volume as a fan of signed tetrahedra from the hull-vertex
    /// centroid.
    pub fn volume(&self) -> f64 {
        let ids = self.vertex_ids();
        let mut origin = Vector3::zeros();
        for &i in &ids {
            origin += self.points[i];
        }
        origin /= ids.len() as f64;

        let mut v6 = 0.0;
        for f in &self.facets {
            let a = self.points[f[0]] - origin;
            let b = self.points[f[1]] - origin;
            let c = self.points[f[2]] - origin;
            v6 += a.cross(&b).dot(&c);
        }
        v6 / 6.0
    }

    /// Largest signed distance of `p` outside any facet plane
    /// (non-positive means inside or on the hull).
    pub fn signed_excess(&self, p: &Vector3<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for f in &self.facets {
            let a = self.points[f[0]];
            let n = (self.points[f[1]] - a).cross(&(self.points[f[2]] - a));
            let norm = n.norm();
            if norm == 0.0 {
                continue;
            }
            worst = worst.max(n.dot(&(p - a)) / norm);
        }
        worst
    }
}

/// Build the convex hull of `points`. Errors with `DegenerateHull` when
/// the set has no affinely independent 4-tuple (fewer than 4 points,
/// collinear, or coplanar within tolerance).
pub fn convex_hull_3d(points: &[Vector3<f64>]) -> Result<Hull3> {
    let n = points.len();
    if n < 4 {
        return Err(Error::DegenerateHull(format!("need >= 4 points, got {n}")));
    }

    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let diag = (hi - lo).norm();
    if diag == 0.0 {
        return Err(Error::DegenerateHull("all points coincide".into()));
    }
    let eps = 1e-10 * diag;

    // Initial simplex from extreme points.
    let i0 = (0..n)
        .min_by(|&a, &b| {
            let (pa, pb) = (points[a], points[b]);
            (pa.x, pa.y, pa.z)
                .partial_cmp(&(pb.x, pb.y, pb.z))
                .unwrap()
        })
        .unwrap();
    let i1 = (0..n)
        .max_by(|&a, &b| {
            (points[a] - points[i0])
                .norm_squared()
                .partial_cmp(&(points[b] - points[i0]).norm_squared())
                .unwrap()
        })
        .unwrap();
    if (points[i1] - points[i0]).norm() <= eps {
        return Err(Error::DegenerateHull("all points coincide".into()));
    }
    let dir = (points[i1] - points[i0]).normalize();
    let line_dist = |p: &Vector3<f64>| {
        let d = p - points[i0];
        (d - dir * d.dot(&dir)).norm()
    };
    let i2 = (0..n)
        .max_by(|&a, &b| line_dist(&points[a]).partial_cmp(&line_dist(&points[b])).unwrap())
        .unwrap();
    if line_dist(&points[i2]) <= eps {
        return Err(Error::DegenerateHull("points are collinear".into()));
    }
    let plane_n = (points[i1] - points[i0])
        .cross(&(points[i2] - points[i0]))
        .normalize();
    let plane_dist = |p: &Vector3<f64>| (p - points[i0]).dot(&plane_n);
    let i3 = (0..n)
        .max_by(|&a, &b| {
            plane_dist(&points[a])
                .abs()
                .partial_cmp(&plane_dist(&points[b]).abs())
                .unwrap()
        })
        .unwrap();
    if plane_dist(&points[i3]).abs() <= eps {
        return Err(Error::DegenerateHull("points are coplanar".into()));
    }

    let seed = [i0, i1, i2, i3];
    let centroid = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
    let orient = |mut f: [usize; 3]| {
        let a = points[f[0]];
        let normal = (points[f[1]] - a).cross(&(points[f[2]] - a));
        if normal.dot(&(centroid - a)) > 0.0 {
            f.swap(1, 2);
        }
        f
    };
    let mut facets: Vec<[usize; 3]> = vec![
        orient([i0, i1, i2]),
        orient([i0, i1, i3]),
        orient([i0, i2, i3]),
        orient([i1, i2, i3]),
    ];

    let outside = |f: &[usize; 3], p: &Vector3<f64>| -> bool {
        let a = points[f[0]];
        let normal = (points[f[1]] - a).cross(&(points[f[2]] - a));
        let norm = normal.norm();
        norm > 0.0 && normal.dot(&(p - a)) / norm > eps
    };

    for pid in 0..n {
        if seed.contains(&pid) {
            continue;
        }
        let p = points[pid];
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&fi| outside(&facets[fi], &p))
            .collect();
        if visible.is_empty() {
            continue;
        }

        // Horizon: directed edges of visible facets whose reverse belongs
        // to a hidden facet.
        let mut directed: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
        for &fi in &visible {
            let f = facets[fi];
            directed.insert((f[0], f[1]));
            directed.insert((f[1], f[2]));
            directed.insert((f[2], f[0]));
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &fi in &visible {
            let f = facets[fi];
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                if !directed.contains(&(e.1, e.0)) {
                    horizon.push(e);
                }
            }
        }

        let visible_set: std::collections::HashSet<usize> = visible.into_iter().collect();
        let mut next: Vec<[usize; 3]> = facets
            .iter()
            .enumerate()
            .filter(|(fi, _)| !visible_set.contains(fi))
            .map(|(_, f)| *f)
            .collect();
        for (u, v) in horizon {
            next.push([u, v, pid]);
        }
        facets = next;
    }

    Ok(Hull3 {
        points: points.to_vec(),
        facets,
    })
}
