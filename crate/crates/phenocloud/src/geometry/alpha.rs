//! 2D alpha shapes over a Delaunay triangulation.
//!
//! Convention: `alpha = 0` is the convex hull; increasing `alpha`
//! tightens the shape. A Delaunay triangle is kept when its circumradius
//! is at most `1 / alpha`, so `alpha` has units of inverse length
//! (the carving disc radius is `1 / alpha`).

use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{Error, Result};

struct Site {
    position: Point2<f64>,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// A computed alpha shape: its area and boundary loops.
#[derive(Debug, Clone)]
pub struct AlphaShape2D {
    pub alpha: f64,
    pub area: f64,
    /// Closed boundary polygons (outer borders and hole borders alike),
    /// each a sequence of vertices without the closing repeat.
    pub boundary: Vec<Vec<[f64; 2]>>,
    /// Number of Delaunay triangles kept at this alpha.
    pub kept_triangles: usize,
}

fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let la = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
    let lb = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
    let lc = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let area2 = cross.abs();
    if area2 == 0.0 {
        return f64::INFINITY;
    }
    la * lb * lc / (2.0 * area2)
}

fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs() / 2.0
}

/// Compute the alpha shape of a 2D multiset. Errors with
/// `DegenerateShape` when the points span no area (fewer than 3 distinct
/// points, or all collinear).
pub fn alpha_shape_2d(points: &[[f64; 2]], alpha: f64) -> Result<AlphaShape2D> {
    if alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }

    let mut tri: DelaunayTriangulation<Site> = DelaunayTriangulation::new();
    for p in points {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        // duplicate positions merge into the existing vertex
        tri.insert(Site {
            position: Point2::new(p[0], p[1]),
        })
        .map_err(|e| Error::InvalidArgument(format!("triangulation insert: {e:?}")))?;
    }

    if tri.num_inner_faces() == 0 {
        return Err(Error::DegenerateShape(
            "points are collinear or too few; area is 0".into(),
        ));
    }

    let max_radius = if alpha == 0.0 { f64::INFINITY } else { 1.0 / alpha };

    let mut area = 0.0;
    let mut kept = 0usize;
    // undirected edge -> signed count for boundary extraction
    let mut edge_count: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    let mut vertex_pos: std::collections::HashMap<usize, [f64; 2]> =
        std::collections::HashMap::new();

    for face in tri.inner_faces() {
        let vs = face.vertices();
        let p: Vec<[f64; 2]> = vs
            .iter()
            .map(|v| {
                let pos = v.position();
                [pos.x, pos.y]
            })
            .collect();
        if circumradius(p[0], p[1], p[2]) <= max_radius {
            area += triangle_area(p[0], p[1], p[2]);
            kept += 1;
            let ids: Vec<usize> = vs.iter().map(|v| v.index()).collect();
            for i in 0..3 {
                vertex_pos.insert(ids[i], p[i]);
                let (u, v) = (ids[i], ids[(i + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
    }

    // Boundary edges belong to exactly one kept triangle; chain them
    // into closed loops.
    let mut adjacency: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for (&(u, v), &count) in &edge_count {
        if count == 1 {
            adjacency.entry(u).or_default().push(v);
            adjacency.entry(v).or_default().push(u);
        }
    }
    for nbrs in adjacency.values_mut() {
        nbrs.sort_unstable();
    }

    let mut used: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let mut boundary = Vec::new();
    let starts: Vec<usize> = adjacency.keys().copied().collect();
    for start in starts {
        loop {
            let Some(&first) = adjacency[&start]
                .iter()
                .find(|&&n| !used.contains(&(start.min(n), start.max(n))))
            else {
                break;
            };
            let mut loop_vertices = vec![start];
            let mut prev = start;
            let mut cur = first;
            used.insert((start.min(first), start.max(first)));
            while cur != start {
                loop_vertices.push(cur);
                let next = adjacency
                    .get(&cur)
                    .and_then(|nbrs| {
                        nbrs.iter()
                            .find(|&&n| n != prev && !used.contains(&(cur.min(n), cur.max(n))))
                            .copied()
                    });
                match next {
                    Some(n) => {
                        used.insert((cur.min(n), cur.max(n)));
                        prev = cur;
                        cur = n;
                    }
                    None => break, // open chain from a sliver; keep what we have
                }
            }
            boundary.push(loop_vertices.iter().map(|v| vertex_pos[v]).collect());
        }
    }

    Ok(AlphaShape2D {
        alpha,
        area,
        boundary,
        kept_triangles: kept,
    })
}
