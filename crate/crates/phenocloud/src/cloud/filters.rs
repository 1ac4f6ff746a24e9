//! Generic cloud cleaning: voxel downsampling, normal estimation, and
//! statistical outlier removal.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

use super::{Point, PointCloud, SpatialIndex};

/// Reduce density to one point per occupied voxel, placed at the voxel
/// centroid. Colors are averaged; normals are averaged and renormalized
/// when every member carries one; labels survive only when unanimous.
///
/// Voxel keys are `floor(position / voxel_size)` per axis, so a point
/// sitting exactly on a boundary belongs to the higher-index voxel.
/// Output voxels appear in order of first member occurrence.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PointCloud> {
    if !(voxel_size > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "voxel_size must be > 0, got {voxel_size}"
        )));
    }

    struct Bin {
        sum: Vector3<f64>,
        color_sum: [f64; 3],
        normal_sum: Vector3<f64>,
        count: usize,
        colored: usize,
        with_normal: usize,
        label: Option<i32>,
        label_uniform: bool,
    }

    let mut order: Vec<(i64, i64, i64)> = Vec::new();
    let mut bins: HashMap<(i64, i64, i64), Bin> = HashMap::new();

    for p in cloud.points() {
        let key = (
            (p.position.x / voxel_size).floor() as i64,
            (p.position.y / voxel_size).floor() as i64,
            (p.position.z / voxel_size).floor() as i64,
        );
        let bin = bins.entry(key).or_insert_with(|| {
            order.push(key);
            Bin {
                sum: Vector3::zeros(),
                color_sum: [0.0; 3],
                normal_sum: Vector3::zeros(),
                count: 0,
                colored: 0,
                with_normal: 0,
                label: None,
                label_uniform: true,
            }
        });
        bin.sum += p.position;
        bin.count += 1;
        if let Some(c) = p.color {
            for a in 0..3 {
                bin.color_sum[a] += c[a] as f64;
            }
            bin.colored += 1;
        }
        if let Some(n) = p.normal {
            bin.normal_sum += n;
            bin.with_normal += 1;
        }
        match (bin.label, p.label) {
            (None, Some(l)) if bin.count == 1 => bin.label = Some(l),
            (Some(cur), Some(l)) if cur == l => {}
            _ => bin.label_uniform = false,
        }
    }

    let points = order
        .into_iter()
        .map(|key| {
            let bin = &bins[&key];
            let n = bin.count as f64;
            let mut p = Point::new(bin.sum.x / n, bin.sum.y / n, bin.sum.z / n);
            if bin.colored == bin.count {
                p.color = Some([
                    (bin.color_sum[0] / n).round().clamp(0.0, 255.0) as u8,
                    (bin.color_sum[1] / n).round().clamp(0.0, 255.0) as u8,
                    (bin.color_sum[2] / n).round().clamp(0.0, 255.0) as u8,
                ]);
            }
            if bin.with_normal == bin.count {
                let avg = bin.normal_sum / n;
                if avg.norm() > 1e-12 {
                    p.normal = Some(avg.normalize());
                }
            }
            if bin.label_uniform {
                p.label = bin.label;
            }
            p
        })
        .collect();

    Ok(PointCloud::with_frame(points, cloud.frame()))
}

/// Estimate a unit normal per point from the covariance of its k nearest
/// neighbors (the point itself excluded). The normal is the eigenvector of
/// the smallest eigenvalue, sign-disambiguated toward +z (then +x, then +y
/// when earlier components vanish).
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("k must be >= 3, got {k}")));
    }
    if cloud.len() < k + 1 {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            got: cloud.len(),
        });
    }

    let index = SpatialIndex::build(cloud);
    let mut out = cloud.clone();
    for i in 0..cloud.len() {
        let neighbors = index.knn(&cloud.position(i), k + 1)?;
        let mut mean = Vector3::zeros();
        let mut used = 0usize;
        for &(id, _) in &neighbors {
            if id == i {
                continue;
            }
            mean += cloud.position(id);
            used += 1;
            if used == k {
                break;
            }
        }
        let mean = mean / used as f64;
        let mut cov = Matrix3::zeros();
        let mut seen = 0usize;
        for &(id, _) in &neighbors {
            if id == i {
                continue;
            }
            let d = cloud.position(id) - mean;
            cov += d * d.transpose();
            seen += 1;
            if seen == k {
                break;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut min_idx = 0;
        for a in 1..3 {
            if eig.eigenvalues[a] < eig.eigenvalues[min_idx] {
                min_idx = a;
            }
        }
        let mut n: Vector3<f64> = eig.eigenvectors.column(min_idx).into();
        n.normalize_mut();
        if n.z != 0.0 {
            if n.z < 0.0 {
                n = -n;
            }
        } else if n.x != 0.0 {
            if n.x < 0.0 {
                n = -n;
            }
        } else if n.y < 0.0 {
            n = -n;
        }
        out.points_mut()[i].normal = Some(n);
    }
    Ok(out)
}

/// Remove points whose mean distance to their k nearest neighbors exceeds
/// `global mean + std_ratio * global std` of that statistic (population
/// standard deviation). Returns the filtered cloud and the removed indices.
pub fn remove_statistical_outliers(
    cloud: &PointCloud,
    k: usize,
    std_ratio: f64,
) -> Result<(PointCloud, Vec<usize>)> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !(std_ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "std_ratio must be > 0, got {std_ratio}"
        )));
    }
    if cloud.len() < k + 1 {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            got: cloud.len(),
        });
    }

    let index = SpatialIndex::build(cloud);
    let mut mean_dist = Vec::with_capacity(cloud.len());
    for i in 0..cloud.len() {
        let neighbors = index.knn(&cloud.position(i), k + 1)?;
        let mut sum = 0.0;
        let mut used = 0usize;
        for &(id, d) in &neighbors {
            if id == i {
                continue;
            }
            sum += d;
            used += 1;
            if used == k {
                break;
            }
        }
        mean_dist.push(sum / used as f64);
    }

    let n = mean_dist.len() as f64;
    let mean = mean_dist.iter().sum::<f64>() / n;
    let var = mean_dist.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + std_ratio * var.sqrt();

    let mut removed = Vec::new();
    let kept = cloud.filter(|i, _| {
        if mean_dist[i] > threshold {
            removed.push(i);
            false
        } else {
            true
        }
    });
    Ok((kept, removed))
}
