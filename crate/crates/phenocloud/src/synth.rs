//! Deterministic synthetic scenes with exhaustive ground truth.
//!
//! Plants are straight line segments (stem plus attached leaves) sampled
//! with Gaussian jitter; scenes add a turntable disk with a dense rim, a
//! pot cylinder, blue edge artifacts, a rigid tilt, and a unit scale to
//! mimic unscaled SfM output. Every generated point carries a truth
//! label, and true heights, radii, and branch angles are recorded
//! exactly from the geometry.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::cloud::{Frame, Point, PointCloud};

/// One leaf: where it attaches, how far it opens from the stem, how long
/// it is, and the direction of the branch plane around the stem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeafSpec {
    /// Attachment height as a fraction of stem length, in (0, 1).
    pub attach_frac: f64,
    /// Angle between leaf and stem directions, degrees in (0, 180).
    pub branch_angle_deg: f64,
    pub length_m: f64,
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantSpec {
    pub stem_height_m: f64,
    /// Stem tilt from vertical (about the y-axis), degrees.
    #[serde(default)]
    pub stem_tilt_deg: f64,
    #[serde(default)]
    pub leaves: Vec<LeafSpec>,
    /// Sample density along segments, points per meter.
    pub density_per_m: f64,
    /// Isotropic Gaussian jitter applied to every sample, meters.
    pub noise_sigma_m: f64,
    pub seed: u64,
}

impl PlantSpec {
    fn validate(&self) {
        assert!(self.stem_height_m > 0.0);
        assert!(self.density_per_m > 0.0, "density must be > 0");
        for leaf in &self.leaves {
            assert!(leaf.attach_frac > 0.0 && leaf.attach_frac < 1.0);
            assert!(leaf.branch_angle_deg > 0.0 && leaf.branch_angle_deg < 180.0);
            assert!(leaf.length_m > 0.0);
        }
    }
}

/// Truth label of a generated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceLabel {
    Plant(u32),
    Pot,
    Table,
    Artifact,
}

/// Exact geometry facts for one generated plant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantTruth {
    /// z extent (max - min) of the noiseless segment geometry, meters.
    pub height_m: f64,
    /// Largest radial distance from the vertical axis through the plant
    /// base, meters.
    pub radius_m: f64,
    /// One branch angle per leaf, degrees, in leaf order.
    pub leaf_angles_deg: Vec<f64>,
    /// Base position in the scene (meters, before tilt/scale).
    pub base_m: [f64; 3],
}

/// Ground truth for a generated cloud, aligned with its point order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneTruth {
    pub labels: Vec<SourceLabel>,
    pub plants: Vec<PlantTruth>,
    pub tilt_deg: f64,
    /// Real-world meters per raw unit; apply_scale should recover it.
    pub scale: f64,
    pub table_radius_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotSpec {
    pub radius_m: f64,
    pub height_m: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSpec {
    pub radius_m: f64,
    pub disk_points: usize,
    pub rim_points: usize,
    /// Plane/rim jitter sigma, meters.
    pub sigma_m: f64,
}

/// Full scene description: plants in a pot on a tilted, unscaled table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Plants with their base xy offsets inside the pot, meters.
    pub plants: Vec<(PlantSpec, [f64; 2])>,
    #[serde(default)]
    pub pot: Option<PotSpec>,
    #[serde(default)]
    pub table: Option<TableSpec>,
    /// Scene tilt about the x-axis, degrees.
    #[serde(default)]
    pub tilt_deg: f64,
    /// Meters per raw unit; positions are divided by this.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Blue artifact points as a fraction of plant points.
    #[serde(default)]
    pub blue_artifact_fraction: f64,
    pub seed: u64,
}

fn default_scale() -> f64 {
    1.0
}

/// Orthonormal pair perpendicular to `d`.
fn perp_frame(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let u = d.cross(&Vector3::z());
    let u = if u.norm() < 1e-9 {
        Vector3::x()
    } else {
        u.normalize()
    };
    let v = d.cross(&u).normalize();
    (u, v)
}

struct Segment {
    start: Vector3<f64>,
    dir: Vector3<f64>,
    length: f64,
}

fn plant_segments(spec: &PlantSpec) -> (Vec<Segment>, Vec<f64>) {
    let tilt = spec.stem_tilt_deg.to_radians();
    let stem_dir = Vector3::new(tilt.sin(), 0.0, tilt.cos());
    let mut segments = vec![Segment {
        start: Vector3::zeros(),
        dir: stem_dir,
        length: spec.stem_height_m,
    }];
    let mut angles = Vec::new();
    let (u, v) = perp_frame(&stem_dir);
    for leaf in &spec.leaves {
        let attach = stem_dir * (leaf.attach_frac * spec.stem_height_m);
        let angle = leaf.branch_angle_deg.to_radians();
        let az = leaf.azimuth_deg.to_radians();
        let dir = stem_dir * angle.cos() + (u * az.cos() + v * az.sin()) * angle.sin();
        segments.push(Segment {
            start: attach,
            dir: dir.normalize(),
            length: leaf.length_m,
        });
        angles.push(leaf.branch_angle_deg);
    }
    (segments, angles)
}

fn sample_segment(
    seg: &Segment,
    density: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Point>,
) {
    let n = (density * seg.length).ceil().max(2.0) as usize;
    let noise = Normal::new(0.0, sigma.max(0.0)).unwrap();
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64 * seg.length;
        let mut p = seg.start + seg.dir * t;
        if sigma > 0.0 {
            p += Vector3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng));
        }
        let color = [
            30u8.saturating_add(rng.gen_range(0..30)),
            140u8.saturating_add(rng.gen_range(0..60)),
            40u8.saturating_add(rng.gen_range(0..30)),
        ];
        out.push(Point::new(p.x, p.y, p.z).with_color(color));
    }
}

fn plant_truth(spec: &PlantSpec, base: Vector3<f64>) -> PlantTruth {
    let (segments, angles) = plant_segments(spec);
    let mut z_lo = f64::INFINITY;
    let mut z_hi = f64::NEG_INFINITY;
    let mut r_max: f64 = 0.0;
    for seg in &segments {
        for p in [seg.start, seg.start + seg.dir * seg.length] {
            z_lo = z_lo.min(p.z);
            z_hi = z_hi.max(p.z);
            r_max = r_max.max((p.x * p.x + p.y * p.y).sqrt());
        }
    }
    PlantTruth {
        height_m: z_hi - z_lo,
        radius_m: r_max,
        leaf_angles_deg: angles,
        base_m: [base.x, base.y, base.z],
    }
}

/// Generate a single plant at the origin, metric scale, no table or pot.
/// Returned clouds are in the scaled frame, ready for trait extraction.
pub fn gen_plant(spec: &PlantSpec) -> (PointCloud, SceneTruth) {
    spec.validate();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (segments, _) = plant_segments(spec);
    let mut points = Vec::new();
    for seg in &segments {
        sample_segment(seg, spec.density_per_m, spec.noise_sigma_m, &mut rng, &mut points);
    }
    let labels = vec![SourceLabel::Plant(0); points.len()];
    let truth = SceneTruth {
        labels,
        plants: vec![plant_truth(spec, Vector3::zeros())],
        tilt_deg: 0.0,
        scale: 1.0,
        table_radius_m: 0.0,
    };
    (PointCloud::with_frame(points, Frame::Scaled), truth)
}

/// Generate a full scene. Positions are rotated by `tilt_deg` about x,
/// divided by `scale`, and shifted by a seeded offset to mimic an
/// arbitrary SfM origin; the returned cloud is in the raw frame.
pub fn gen_scene(spec: &SceneSpec) -> (PointCloud, SceneTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5ce9e5);
    assert!(spec.scale > 0.0, "scale must be > 0");

    let pot_top = spec.pot.as_ref().map(|p| p.height_m).unwrap_or(0.0);
    let mut points: Vec<Point> = Vec::new();
    let mut labels: Vec<SourceLabel> = Vec::new();
    let mut plants = Vec::new();

    let mut plant_point_ranges = Vec::new();
    for (plant_id, (plant, offset)) in spec.plants.iter().enumerate() {
        plant.validate();
        let base = Vector3::new(offset[0], offset[1], pot_top);
        let mut plant_rng = ChaCha8Rng::seed_from_u64(plant.seed);
        let (segments, _) = plant_segments(plant);
        let start = points.len();
        for seg in &segments {
            let placed = Segment {
                start: seg.start + base,
                dir: seg.dir,
                length: seg.length,
            };
            sample_segment(&placed, plant.density_per_m, plant.noise_sigma_m, &mut plant_rng, &mut points);
        }
        labels.resize(points.len(), SourceLabel::Plant(plant_id as u32));
        plant_point_ranges.push(start..points.len());
        plants.push(plant_truth(plant, base));
    }

    if let Some(pot) = &spec.pot {
        for _ in 0..pot.points {
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = rng.gen::<f64>() * pot.height_m;
            let p = Vector3::new(pot.radius_m * t.cos(), pot.radius_m * t.sin(), z);
            let shade = rng.gen_range(110u8..150);
            points.push(Point::new(p.x, p.y, p.z).with_color([shade, shade / 2, 40]));
            labels.push(SourceLabel::Pot);
        }
    }

    if let Some(table) = &spec.table {
        let noise = Normal::new(0.0, table.sigma_m.max(0.0)).unwrap();
        for _ in 0..table.disk_points {
            let r = table.radius_m * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let p = Vector3::new(r * t.cos(), r * t.sin(), noise.sample(&mut rng));
            let shade = rng.gen_range(160u8..210);
            points.push(Point::new(p.x, p.y, p.z).with_color([shade, shade, shade]));
            labels.push(SourceLabel::Table);
        }
        for _ in 0..table.rim_points {
            let r = table.radius_m + noise.sample(&mut rng);
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let p = Vector3::new(r * t.cos(), r * t.sin(), noise.sample(&mut rng));
            let shade = rng.gen_range(120u8..170);
            points.push(Point::new(p.x, p.y, p.z).with_color([shade, shade, shade]));
            labels.push(SourceLabel::Table);
        }
    }

    if spec.blue_artifact_fraction > 0.0 {
        let total_plant: usize = plant_point_ranges.iter().map(|r| r.len()).sum();
        let count = (spec.blue_artifact_fraction * total_plant as f64).round() as usize;
        let offsets = Normal::new(0.0, 0.004).unwrap();
        for _ in 0..count {
            let range = &plant_point_ranges[rng.gen_range(0..plant_point_ranges.len())];
            let anchor = points[rng.gen_range(range.clone())].position;
            let p = anchor
                + Vector3::new(
                    offsets.sample(&mut rng),
                    offsets.sample(&mut rng),
                    offsets.sample(&mut rng),
                );
            let color = [
                rng.gen_range(20u8..80),
                rng.gen_range(20u8..80),
                rng.gen_range(150u8..=255),
            ];
            points.push(Point::new(p.x, p.y, p.z).with_color(color));
            labels.push(SourceLabel::Artifact);
        }
    }

    // tilt, unscale, and shift into an arbitrary raw origin
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), spec.tilt_deg.to_radians());
    let shift = Vector3::new(
        rng.gen::<f64>() * 4.0 - 2.0,
        rng.gen::<f64>() * 4.0 - 2.0,
        rng.gen::<f64>() * 4.0 - 2.0,
    );
    for p in &mut points {
        p.position = rot * p.position / spec.scale + shift;
    }

    let truth = SceneTruth {
        labels,
        plants,
        tilt_deg: spec.tilt_deg,
        scale: spec.scale,
        table_radius_m: spec.table.as_ref().map(|t| t.radius_m).unwrap_or(0.0),
    };
    (PointCloud::new(points), truth)
}
