//! Computational-geometry primitives: 3D convex hulls, 2D hulls, and
//! Delaunay-based alpha shapes.

mod alpha;
mod hull3;

pub use alpha::{alpha_shape_2d, AlphaShape2D};
pub use hull3::{convex_hull_3d, Hull3};

/// 2D convex hull (monotone chain), returned counter-clockwise without
/// the closing point. Collinear inputs return fewer than 3 vertices.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }

    fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    }

    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Signed area of a simple polygon (positive when counter-clockwise).
pub fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..polygon.len() {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        sum += a[0] * b[1] - b[0] * a[1];
    }
    sum / 2.0
}

/// Area of the 2D convex hull of a point set.
pub fn convex_hull_area_2d(points: &[[f64; 2]]) -> f64 {
    polygon_area(&convex_hull_2d(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull_area() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let hull = convex_hull_2d(&pts);
        assert_eq!(hull.len(), 4);
        assert!((convex_hull_area_2d(&pts) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_have_zero_area() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert_eq!(convex_hull_area_2d(&pts), 0.0);
    }
}
