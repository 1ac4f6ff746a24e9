//! Point-cloud data model, PLY I/O, spatial indexing, and cleaning primitives.

mod filters;
mod kdtree;
mod ply;

pub use filters::{estimate_normals, remove_statistical_outliers, voxel_downsample};
pub use kdtree::SpatialIndex;
pub use ply::{load_ply, write_ply, PlyColumn, PlyData};

use nalgebra::Vector3;

/// Noise label shared by the segmentation stages.
pub const NOISE_LABEL: i32 = -1;

/// A single cloud point: position plus optional color, normal, and label.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub position: Vector3<f64>,
    /// 8-bit RGB color, if the source carried one.
    pub color: Option<[u8; 3]>,
    /// Unit surface normal, if estimated or loaded.
    pub normal: Option<Vector3<f64>>,
    /// Integer label; -1 is reserved for noise.
    pub label: Option<i32>,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point {
            position: Vector3::new(x, y, z),
            color: None,
            normal: None,
            label: None,
        }
    }

    pub fn with_color(mut self, color: [u8; 3]) -> Self {
        self.color = Some(color);
        self
    }

    pub fn with_label(mut self, label: i32) -> Self {
        self.label = Some(label);
        self
    }
}

/// Processing state of a cloud. Transitions are monotone:
/// `Raw` -> `Aligned` -> `Scaled`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Frame {
    Raw,
    Aligned,
    Scaled,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Raw => "raw",
            Frame::Aligned => "aligned",
            Frame::Scaled => "scaled",
        }
    }
}

/// An ordered set of points together with its processing frame.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point>,
    frame: Frame,
}

impl PointCloud {
    /// A cloud in the raw (unaligned, unscaled) frame.
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud {
            points,
            frame: Frame::Raw,
        }
    }

    /// A cloud in an explicit frame, for callers that construct
    /// already-processed geometry (tests, generators, label transfer).
    pub fn with_frame(points: Vec<Point>, frame: Frame) -> Self {
        PointCloud { points, frame }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn scale_applied(&self) -> bool {
        self.frame == Frame::Scaled
    }

    pub fn position(&self, i: usize) -> Vector3<f64> {
        self.points[i].position
    }

    pub fn positions(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.points.iter().map(|p| p.position)
    }

    /// Mean of all positions. `None` for an empty cloud.
    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.positions().sum();
        Some(sum / self.points.len() as f64)
    }

    /// Axis-aligned bounds as (min, max). `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = self.points.first()?.position;
        let mut lo = first;
        let mut hi = first;
        for p in self.positions() {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }

    /// Diagonal length of the bounding box; 0 for empty or single-point clouds.
    pub fn bbox_diagonal(&self) -> f64 {
        self.bounds().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    /// New cloud containing the points at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            frame: self.frame,
        }
    }

    /// New cloud retaining points for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(usize, &Point) -> bool) -> PointCloud {
        PointCloud {
            points: self
                .points
                .iter()
                .enumerate()
                .filter(|(i, p)| keep(*i, p))
                .map(|(_, p)| p.clone())
                .collect(),
            frame: self.frame,
        }
    }

    /// Apply `f` to every position, keeping other attributes.
    pub fn map_positions(&self, mut f: impl FnMut(Vector3<f64>) -> Vector3<f64>) -> PointCloud {
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| Point {
                    position: f(p.position),
                    ..p.clone()
                })
                .collect(),
            frame: self.frame,
        }
    }

    /// Per-point labels as a vector, `NOISE_LABEL` for unlabeled points.
    pub fn labels(&self) -> Vec<i32> {
        self.points
            .iter()
            .map(|p| p.label.unwrap_or(NOISE_LABEL))
            .collect()
    }

    /// Replace all labels from a slice of the same length.
    pub fn set_labels(&mut self, labels: &[i32]) {
        assert_eq!(labels.len(), self.points.len());
        for (p, &l) in self.points.iter_mut().zip(labels) {
            p.label = Some(l);
        }
    }

    pub(crate) fn set_frame(&mut self, frame: Frame) {
        debug_assert!(frame >= self.frame, "frame transitions are monotone");
        self.frame = frame;
    }

    pub fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_of_cube_corners() {
        let pts = (0..8)
            .map(|i| {
                Point::new(
                    (i & 1) as f64 + 5.0,
                    ((i >> 1) & 1) as f64 + 5.0,
                    ((i >> 2) & 1) as f64 + 5.0,
                )
            })
            .collect();
        let cloud = PointCloud::new(pts);
        let c = cloud.centroid().unwrap();
        assert!((c - Vector3::new(5.5, 5.5, 5.5)).norm() < 1e-12);
    }

    #[test]
    fn empty_cloud_has_no_centroid() {
        assert!(PointCloud::new(vec![]).centroid().is_none());
        assert_eq!(PointCloud::new(vec![]).bbox_diagonal(), 0.0);
    }

    #[test]
    fn frame_ordering() {
        assert!(Frame::Raw < Frame::Aligned);
        assert!(Frame::Aligned < Frame::Scaled);
    }
}
