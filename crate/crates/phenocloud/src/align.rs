//! Raw-cloud conditioning: centering, turntable-plane RANSAC, rotation
//! onto the z-axis, ring-based metric scaling, color filtering, and
//! pot/table removal.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{Frame, PointCloud};
use crate::error::{Error, Result};

/// A fitted plane `a x + b y + c z + d = 0` with unit normal `(a, b, c)`,
/// its inlier ids, and the threshold used to collect them.
#[derive(Debug, Clone)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub d: f64,
    pub inliers: Vec<usize>,
    pub distance_threshold: f64,
}

impl Plane {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.normal.x, self.normal.y, self.normal.z, self.d]
    }

    /// Unsigned point-plane distance.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        (self.normal.dot(p) + self.d).abs()
    }

    /// Flip sign so the leading nonzero coefficient of (c, b, a) is
    /// positive; keeps reported planes reproducible across sample order.
    fn canonicalize(&mut self) {
        let flip = if self.normal.z != 0.0 {
            self.normal.z < 0.0
        } else if self.normal.y != 0.0 {
            self.normal.y < 0.0
        } else {
            self.normal.x < 0.0
        };
        if flip {
            self.normal = -self.normal;
            self.d = -self.d;
        }
    }
}

/// Rotation followed by translation; preserves pairwise distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Transform every position (and rotate normals) in the cloud.
    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        let mut out = cloud.map_positions(|p| self.apply_point(&p));
        for p in out.points_mut() {
            if let Some(n) = p.normal {
                p.normal = Some(self.rotation * n);
            }
        }
        out
    }
}

/// Scale calibration from the turntable ring: `scale_factor` converts
/// raw units into meters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub peak_radius_raw: f64,
    pub known_radius: f64,
    pub scale_factor: f64,
}

impl ScaleCalibration {
    pub fn new(peak_radius_raw: f64, known_radius: f64) -> Result<Self> {
        if !(peak_radius_raw > 0.0) || !(known_radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radii must be > 0 (raw {peak_radius_raw}, known {known_radius})"
            )));
        }
        Ok(ScaleCalibration {
            peak_radius_raw,
            known_radius,
            scale_factor: known_radius / peak_radius_raw,
        })
    }
}

/// Default turntable ring radius in meters (39.8 cm diameter platform).
pub const DEFAULT_TABLE_RADIUS_M: f64 = 0.199;

/// Subtract the centroid from every point. Returns the centered cloud
/// and the removed centroid.
pub fn center(cloud: &PointCloud) -> Result<(PointCloud, Vector3<f64>)> {
    let centroid = cloud.centroid().ok_or(Error::EmptyCloud)?;
    Ok((cloud.map_positions(|p| p - centroid), centroid))
}

fn fit_plane_three(points: [Vector3<f64>; 3]) -> Option<(Vector3<f64>, f64)> {
    let e1 = points[1] - points[0];
    let e2 = points[2] - points[0];
    let cross = e1.cross(&e2);
    // degenerate sample: nearly collinear triple
    if cross.norm() < 1e-12 * e1.norm() * e2.norm() {
        return None;
    }
    let normal = cross.normalize();
    Some((normal, -normal.dot(&points[0])))
}

/// Least-squares plane through the given points (smallest-eigenvalue
/// eigenvector of the centered covariance).
fn fit_plane_lsq(cloud: &PointCloud, ids: &[usize]) -> Option<(Vector3<f64>, f64)> {
    if ids.len() < 3 {
        return None;
    }
    let mut mean = Vector3::zeros();
    for &i in ids {
        mean += cloud.position(i);
    }
    mean /= ids.len() as f64;
    let mut cov = Matrix3::zeros();
    for &i in ids {
        let d = cloud.position(i) - mean;
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut min_idx = 0;
    for a in 1..3 {
        if eig.eigenvalues[a] < eig.eigenvalues[min_idx] {
            min_idx = a;
        }
    }
    let mut normal: Vector3<f64> = eig.eigenvectors.column(min_idx).into();
    if normal.norm() == 0.0 {
        return None;
    }
    normal.normalize_mut();
    Some((normal, -normal.dot(&mean)))
}

fn collect_inliers(cloud: &PointCloud, normal: &Vector3<f64>, d: f64, threshold: f64) -> Vec<usize> {
    (0..cloud.len())
        .filter(|&i| (normal.dot(&cloud.position(i)) + d).abs() < threshold)
        .collect()
}

/// Seeded RANSAC plane fit: the plane with the most inliers over
/// `max_iterations` random 3-point samples, then (by default) refined by
/// least squares over its inliers with the inlier set recomputed.
pub fn segment_plane(
    cloud: &PointCloud,
    distance_threshold: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<Plane> {
    segment_plane_opts(cloud, distance_threshold, max_iterations, seed, true)
}

/// [`segment_plane`] with the least-squares refinement made optional
/// (`refine = false` returns the best raw sampled plane).
pub fn segment_plane_opts(
    cloud: &PointCloud,
    distance_threshold: f64,
    max_iterations: usize,
    seed: u64,
    refine: bool,
) -> Result<Plane> {
    if cloud.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: cloud.len(),
        });
    }
    if !(distance_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance_threshold must be > 0, got {distance_threshold}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cloud.len();
    let mut best: Option<(Vector3<f64>, f64, usize)> = None;

    for _ in 0..max_iterations {
        let mut ids = [0usize; 3];
        ids[0] = rng.gen_range(0..n);
        loop {
            ids[1] = rng.gen_range(0..n);
            if ids[1] != ids[0] {
                break;
            }
        }
        loop {
            ids[2] = rng.gen_range(0..n);
            if ids[2] != ids[0] && ids[2] != ids[1] {
                break;
            }
        }
        let Some((normal, d)) = fit_plane_three([
            cloud.position(ids[0]),
            cloud.position(ids[1]),
            cloud.position(ids[2]),
        ]) else {
            continue;
        };
        let count = (0..n)
            .filter(|&i| (normal.dot(&cloud.position(i)) + d).abs() < distance_threshold)
            .count();
        if best.map(|(_, _, c)| count > c).unwrap_or(true) {
            best = Some((normal, d, count));
        }
    }

    let (mut normal, mut d, _) = best.ok_or(Error::NoPlaneFound {
        iterations: max_iterations,
    })?;
    let mut inliers = collect_inliers(cloud, &normal, d, distance_threshold);

    if refine {
        if let Some((r_normal, r_d)) = fit_plane_lsq(cloud, &inliers) {
            normal = r_normal;
            d = r_d;
            inliers = collect_inliers(cloud, &normal, d, distance_threshold);
        }
    }

    let mut plane = Plane {
        normal,
        d,
        inliers,
        distance_threshold,
    };
    plane.canonicalize();
    Ok(plane)
}

/// Rotate the cloud so the plane normal maps onto +z and translate the
/// plane onto z = 0. The normal sign is chosen so that the majority of
/// non-inlier points (the plant) end up above the plane.
pub fn align_to_plane(cloud: &PointCloud, plane: &Plane) -> (PointCloud, RigidTransform) {
    let build = |normal: Vector3<f64>, d: f64| -> RigidTransform {
        let rotation = Rotation3::rotation_between(&normal, &Vector3::z())
            .unwrap_or_else(|| {
                // antiparallel: rotate half a turn about x
                Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), std::f64::consts::PI)
            })
            .into_inner();
        RigidTransform {
            rotation,
            translation: Vector3::new(0.0, 0.0, d),
        }
    };

    let inlier_set: std::collections::HashSet<usize> = plane.inliers.iter().copied().collect();
    let candidate = build(plane.normal, plane.d);
    let (mut above, mut total) = (0usize, 0usize);
    for i in 0..cloud.len() {
        if inlier_set.contains(&i) {
            continue;
        }
        total += 1;
        if candidate.apply_point(&cloud.position(i)).z > 0.0 {
            above += 1;
        }
    }

    let transform = if total > 0 && 2 * above < total {
        build(-plane.normal, -plane.d)
    } else {
        candidate
    };

    let mut out = transform.apply(cloud);
    out.set_frame(Frame::Aligned);
    (out, transform)
}

/// Ring segmentation per the radial-histogram method: band-filter by z,
/// histogram `r = sqrt(x^2 + y^2)` into `num_bins` equal bins, take the
/// center of the densest bin as the peak radius, and return the ids
/// (into the full cloud) whose radius is within `tolerance` of it.
pub fn segment_ring(
    cloud: &PointCloud,
    num_bins: usize,
    z_min: f64,
    z_max: f64,
    tolerance: f64,
) -> Result<(Vec<usize>, f64)> {
    if num_bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "num_bins must be >= 2, got {num_bins}"
        )));
    }
    if !(z_min < z_max) {
        return Err(Error::InvalidArgument(format!(
            "need z_min < z_max, got [{z_min}, {z_max}]"
        )));
    }

    let banded: Vec<(usize, f64)> = (0..cloud.len())
        .filter_map(|i| {
            let p = cloud.position(i);
            (p.z > z_min && p.z < z_max).then(|| (i, (p.x * p.x + p.y * p.y).sqrt()))
        })
        .collect();
    if banded.is_empty() {
        return Err(Error::EmptyBand { z_min, z_max });
    }

    let r_lo = banded.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let r_hi = banded.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);

    let peak_radius = if r_hi - r_lo <= 0.0 {
        r_lo
    } else {
        let width = (r_hi - r_lo) / num_bins as f64;
        let mut hist = vec![0usize; num_bins];
        for &(_, r) in &banded {
            let bin = (((r - r_lo) / width) as usize).min(num_bins - 1);
            hist[bin] += 1;
        }
        // argmax with ties resolved to the lower bin index
        let peak_bin = hist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        r_lo + (peak_bin as f64 + 0.5) * width
    };

    let ring: Vec<usize> = banded
        .iter()
        .filter(|(_, r)| (r - peak_radius).abs() <= tolerance)
        .map(|&(i, _)| i)
        .collect();
    Ok((ring, peak_radius))
}

/// Multiply all coordinates by the calibration's scale factor, moving
/// the cloud into the scaled (metric) frame.
pub fn apply_scale(cloud: &PointCloud, calib: &ScaleCalibration) -> Result<PointCloud> {
    if cloud.frame() != Frame::Aligned {
        return Err(Error::FrameMismatch {
            expected: Frame::Aligned.name(),
            got: cloud.frame().name(),
        });
    }
    let s = calib.scale_factor;
    let mut out = cloud.map_positions(|p| p * s);
    out.set_frame(Frame::Scaled);
    Ok(out)
}

/// Color-band semantics for [`filter_color`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Keep a point only when every channel falls outside `[lower, upper]`
    /// (the literal band predicate).
    All,
    /// Keep a point when at least one channel falls outside the band.
    Any,
}

/// Remove points whose color sits inside the `[lower, upper]` band,
/// under the chosen [`FilterMode`]. Points without color are kept.
pub fn filter_color(
    cloud: &PointCloud,
    lower: [u8; 3],
    upper: [u8; 3],
    mode: FilterMode,
) -> Result<PointCloud> {
    for ch in 0..3 {
        if lower[ch] > upper[ch] {
            return Err(Error::InvalidArgument(format!(
                "lower {lower:?} must be <= upper {upper:?} channel-wise"
            )));
        }
    }
    Ok(cloud.filter(|_, p| {
        let Some(c) = p.color else { return true };
        let outside = |ch: usize| c[ch] < lower[ch] || c[ch] > upper[ch];
        match mode {
            FilterMode::All => (0..3).all(outside),
            FilterMode::Any => (0..3).any(outside),
        }
    }))
}

/// Remove the table and pot: drops points below `z_min` and points
/// inside the pot cylinder (`z < pot_top` and radius <= `pot_radius`).
pub fn crop_cylinder(cloud: &PointCloud, pot_radius: f64, pot_top: f64, z_min: f64) -> PointCloud {
    cloud.filter(|_, p| {
        let pos = p.position;
        if pos.z < z_min {
            return false;
        }
        let r = (pos.x * pos.x + pos.y * pos.y).sqrt();
        !(pos.z < pot_top && r <= pot_radius)
    })
}
