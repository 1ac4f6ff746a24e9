//! Scalar phenotypic traits of a cleaned, scaled plant cloud: height,
//! radius, convex-hull volumes of height fractions, ground-cover area,
//! and the derived ratios.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{alpha_shape_2d, convex_hull_3d, AlphaShape2D};

/// Plant height: z extent of the cloud.
pub fn height(cloud: &PointCloud) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let z_lo = cloud.positions().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let z_hi = cloud.positions().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
    Ok(z_hi - z_lo)
}

/// Plant radius: the largest radial distance from the z-axis, together
/// with the id of the farthest point. Height has no bearing.
pub fn radius(cloud: &PointCloud) -> Result<(f64, usize)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut best = (0.0f64, 0usize);
    for (i, p) in cloud.positions().enumerate() {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        if r > best.0 {
            best = (r, i);
        }
    }
    Ok(best)
}

/// Keep the top fraction `f` of the plant by height: points with
/// `z >= z_min + (1 - f) * (z_max - z_min)`.
pub fn top_fraction(cloud: &PointCloud, f: f64) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction must be in (0, 1], got {f}"
        )));
    }
    let z_lo = cloud.positions().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let z_hi = cloud.positions().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
    let cutoff = z_lo + (1.0 - f) * (z_hi - z_lo);
    Ok(cloud.filter(|_, p| p.position.z >= cutoff))
}

/// Volume of the 3D convex hull. Degenerate (coplanar or tiny) inputs
/// surface as `DegenerateHull`.
pub fn convex_hull_volume(cloud: &PointCloud) -> Result<f64> {
    let positions: Vec<Vector3<f64>> = cloud.positions().collect();
    let hull = convex_hull_3d(&positions)?;
    Ok(hull.volume())
}

/// Ground-cover area: the alpha shape of the cloud projected onto the
/// xy-plane. `alpha = 0` reduces to the 2D convex-hull area.
pub fn ground_cover_area(cloud: &PointCloud, alpha: f64) -> Result<(f64, AlphaShape2D)> {
    if cloud.len() < 3 {
        return Err(Error::DegenerateShape(format!(
            "need >= 3 points, got {}",
            cloud.len()
        )));
    }
    let projected: Vec<[f64; 2]> = cloud.positions().map(|p| [p.x, p.y]).collect();
    let shape = alpha_shape_2d(&projected, alpha)?;
    Ok((shape.area, shape))
}

/// Default alpha for ground cover, per meter: carving discs of
/// 1/alpha = 2 cm follow leaf outlines at desk-plant scale.
pub const DEFAULT_GROUND_COVER_ALPHA: f64 = 50.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraitConfig {
    /// Alpha-shape parameter for ground cover (per meter).
    pub alpha: f64,
    /// Compute the ground-cover area G. The paper computes G only for
    /// single-plant clouds, so this is an explicit opt-in.
    pub ground_cover: bool,
    /// Hull fractions; fixed record slots for 100%, 60%, 40%.
    pub fractions: [f64; 3],
}

impl Default for TraitConfig {
    fn default() -> Self {
        TraitConfig {
            alpha: DEFAULT_GROUND_COVER_ALPHA,
            ground_cover: false,
            fractions: [1.0, 0.6, 0.4],
        }
    }
}

/// Per-plant feature vector. Ratio accessors divide the stored
/// primaries directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraitRecord {
    pub plant_id: String,
    pub h_max: f64,
    pub r_max: f64,
    /// Id of the point realizing `r_max`.
    pub r_max_point: usize,
    pub v100: f64,
    pub v60: f64,
    pub v40: f64,
    /// Ground-cover area; `None` when not requested.
    pub g: Option<f64>,
    /// Set when any hull was degenerate and its volume reported as 0.
    pub degenerate_hull: bool,
}

impl TraitRecord {
    pub fn h_over_v(&self, v: f64) -> f64 {
        self.h_max / v
    }

    pub fn ratios(&self) -> [f64; 9] {
        [
            self.h_max / self.v100,
            self.h_max / self.v60,
            self.h_max / self.v40,
            self.r_max / self.v100,
            self.r_max / self.v60,
            self.r_max / self.v40,
            self.v100 / self.v60,
            self.v100 / self.v40,
            self.v60 / self.v40,
        ]
    }

    /// Column order of the trait CSV.
    pub const CSV_HEADER: &'static str = "plant_id,H_max,R_max,V100,V60,V40,G,H_over_V100,H_over_V60,H_over_V40,R_over_V100,R_over_V60,R_over_V40,V100_over_V60,V100_over_V40,V60_over_V40";

    pub fn to_csv_row(&self) -> String {
        let r = self.ratios();
        let g = self.g.map(|g| g.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.plant_id,
            self.h_max,
            self.r_max,
            self.v100,
            self.v60,
            self.v40,
            g,
            r[0],
            r[1],
            r[2],
            r[3],
            r[4],
            r[5],
            r[6],
            r[7],
            r[8]
        )
    }

    pub fn from_csv_row(line: &str) -> Result<TraitRecord> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::SchemaError(format!(
                "expected 16 columns, got {}",
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::SchemaError(format!("bad number {:?}", fields[i])))
        };
        Ok(TraitRecord {
            plant_id: fields[0].to_string(),
            h_max: num(1)?,
            r_max: num(2)?,
            r_max_point: 0,
            v100: num(3)?,
            v60: num(4)?,
            v40: num(5)?,
            g: if fields[6].is_empty() {
                None
            } else {
                Some(num(6)?)
            },
            degenerate_hull: false,
        })
    }
}

/// Compute the full trait record for a cleaned, scaled plant cloud.
/// Degenerate hulls report volume 0 and set the quality flag instead of
/// failing the plant.
pub fn compute_traits(cloud: &PointCloud, plant_id: &str, config: &TraitConfig) -> Result<TraitRecord> {
    let h_max = height(cloud)?;
    let (r_max, r_max_point) = radius(cloud)?;

    let mut degenerate = false;
    let mut volume_of = |fraction: f64| -> Result<f64> {
        let part = top_fraction(cloud, fraction)?;
        match convex_hull_volume(&part) {
            Ok(v) => Ok(v),
            Err(Error::DegenerateHull(_)) => {
                degenerate = true;
                Ok(0.0)
            }
            Err(e) => Err(e),
        }
    };
    let v100 = volume_of(config.fractions[0])?;
    let v60 = volume_of(config.fractions[1])?;
    let v40 = volume_of(config.fractions[2])?;

    let g = if config.ground_cover {
        match ground_cover_area(cloud, config.alpha) {
            Ok((area, _)) => Some(area),
            Err(Error::DegenerateShape(_)) => {
                degenerate = true;
                Some(0.0)
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(TraitRecord {
        plant_id: plant_id.to_string(),
        h_max,
        r_max,
        r_max_point,
        v100,
        v60,
        v40,
        g,
        degenerate_hull: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{Frame, Point};
    use crate::synth::{gen_plant, LeafSpec, PlantSpec};

    fn cloud_of(zs: &[(f64, f64, f64)]) -> PointCloud {
        PointCloud::with_frame(
            zs.iter().map(|&(x, y, z)| Point::new(x, y, z)).collect(),
            Frame::Scaled,
        )
    }

    #[test]
    fn height_is_z_extent() {
        let cloud = cloud_of(&[(0.0, 0.0, 0.0), (0.0, 0.0, 0.5), (0.0, 0.0, 5.0)]);
        assert_eq!(height(&cloud).unwrap(), 5.0);
    }

    #[test]
    fn single_point_has_zero_height() {
        let cloud = cloud_of(&[(1.0, 2.0, 3.0)]);
        assert_eq!(height(&cloud).unwrap(), 0.0);
    }

    #[test]
    fn radius_ignores_height() {
        let cloud = cloud_of(&[(0.0, 0.0, 5.0), (0.2, 0.0, 0.1)]);
        let (r, id) = radius(&cloud).unwrap();
        assert!((r - 0.2).abs() < 1e-15);
        assert_eq!(id, 1);
    }

    #[test]
    fn on_axis_points_have_zero_radius() {
        let cloud = cloud_of(&[(0.0, 0.0, 1.0), (0.0, 0.0, 2.0)]);
        assert_eq!(radius(&cloud).unwrap().0, 0.0);
    }

    #[test]
    fn top_fraction_whole_is_identity() {
        let cloud = cloud_of(&[(0.0, 0.0, 0.0), (0.0, 0.0, 1.0)]);
        assert_eq!(top_fraction(&cloud, 1.0).unwrap().len(), 2);
    }

    #[test]
    fn top_fraction_threshold_is_forced() {
        let pts: Vec<(f64, f64, f64)> = (0..=10).map(|i| (0.0, 0.0, i as f64 / 10.0)).collect();
        let cloud = cloud_of(&pts);
        let top = top_fraction(&cloud, 0.4).unwrap();
        assert_eq!(top.len(), 5); // z in {0.6, 0.7, 0.8, 0.9, 1.0}
        assert!(top.positions().all(|p| p.z >= 0.6));
    }

    #[test]
    fn top_fractions_nest() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        let pts: Vec<(f64, f64, f64)> = (0..300)
            .map(|_| (rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let cloud = cloud_of(&pts);
        let t40 = top_fraction(&cloud, 0.4).unwrap();
        let t60 = top_fraction(&cloud, 0.6).unwrap();
        assert!(t40.len() <= t60.len());
        assert!(t60.len() <= cloud.len());
        let in60: std::collections::HashSet<String> =
            t60.positions().map(|p| format!("{p:?}")).collect();
        for p in t40.positions() {
            assert!(in60.contains(&format!("{p:?}")));
        }
    }

    #[test]
    fn unit_cube_volume() {
        let pts: Vec<(f64, f64, f64)> = (0..8)
            .map(|i| {
                (
                    (i & 1) as f64,
                    ((i >> 1) & 1) as f64,
                    ((i >> 2) & 1) as f64,
                )
            })
            .collect();
        assert!((convex_hull_volume(&cloud_of(&pts)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_tetrahedron_volume() {
        let pts = [
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, 1.0),
        ];
        assert!((convex_hull_volume(&cloud_of(&pts)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn coplanar_cloud_is_degenerate() {
        let pts = [
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (1.0, 1.0, 0.0),
        ];
        assert!(matches!(
            convex_hull_volume(&cloud_of(&pts)),
            Err(Error::DegenerateHull(_))
        ));
    }

    #[test]
    fn ground_cover_alpha_zero_is_hull_area() {
        let pts = [
            (0.0, 0.0, 0.3),
            (1.0, 0.0, 0.1),
            (1.0, 1.0, 0.7),
            (0.0, 1.0, 0.2),
        ];
        let (area, shape) = ground_cover_area(&cloud_of(&pts), 0.0).unwrap();
        assert!((area - 1.0).abs() < 1e-12);
        assert_eq!(shape.kept_triangles, 2);
    }

    #[test]
    fn compute_traits_on_synthetic_plant() {
        let spec = PlantSpec {
            stem_height_m: 0.32,
            stem_tilt_deg: 0.0,
            leaves: vec![
                LeafSpec {
                    attach_frac: 0.4,
                    branch_angle_deg: 50.0,
                    length_m: 0.12,
                    azimuth_deg: 0.0,
                },
                LeafSpec {
                    attach_frac: 0.6,
                    branch_angle_deg: 40.0,
                    length_m: 0.10,
                    azimuth_deg: 180.0,
                },
            ],
            density_per_m: 4000.0,
            noise_sigma_m: 0.0008,
            seed: 71,
        };
        let (cloud, truth) = gen_plant(&spec);
        let record = compute_traits(
            &cloud,
            "plant-71",
            &TraitConfig {
                ground_cover: true,
                ..TraitConfig::default()
            },
        )
        .unwrap();
        let t = &truth.plants[0];
        assert!((record.h_max - t.height_m).abs() / t.height_m < 0.05);
        assert!((record.r_max - t.radius_m).abs() / t.radius_m < 0.05);
        assert!(record.v100 >= record.v60 && record.v60 >= record.v40);
        assert!(record.g.unwrap() > 0.0);
        assert!(!record.degenerate_hull);
    }

    #[test]
    fn traits_scale_dimensionally() {
        let (cloud, _) = gen_plant(&PlantSpec {
            stem_height_m: 0.3,
            stem_tilt_deg: 5.0,
            leaves: vec![LeafSpec {
                attach_frac: 0.5,
                branch_angle_deg: 60.0,
                length_m: 0.1,
                azimuth_deg: 30.0,
            }],
            density_per_m: 3000.0,
            noise_sigma_m: 0.0005,
            seed: 72,
        });
        let config = TraitConfig::default();
        let base = compute_traits(&cloud, "p", &config).unwrap();
        let doubled_cloud = cloud.map_positions(|p| p * 2.0);
        let doubled = compute_traits(&doubled_cloud, "p", &config).unwrap();
        assert!((doubled.h_max / base.h_max - 2.0).abs() < 1e-9);
        assert!((doubled.r_max / base.r_max - 2.0).abs() < 1e-9);
        assert!((doubled.v100 / base.v100 - 8.0).abs() < 1e-6);
        let br = base.ratios();
        let dr = doubled.ratios();
        // H/V scales by 2/8, V100/V60 is invariant
        assert!((dr[0] / br[0] - 0.25).abs() < 1e-6);
        assert!((dr[6] / br[6] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let record = TraitRecord {
            plant_id: "alsen-14-03".into(),
            h_max: 0.312345678912345,
            r_max: 0.098765432109876,
            r_max_point: 17,
            v100: 1.234e-3,
            v60: 7.5e-4,
            v40: 2.5e-4,
            g: Some(0.0123456789),
            degenerate_hull: false,
        };
        let row = record.to_csv_row();
        let back = TraitRecord::from_csv_row(&row).unwrap();
        assert_eq!(back.plant_id, record.plant_id);
        assert_eq!(back.h_max, record.h_max);
        assert_eq!(back.r_max, record.r_max);
        assert_eq!(back.v100, record.v100);
        assert_eq!(back.v60, record.v60);
        assert_eq!(back.v40, record.v40);
        assert_eq!(back.g, record.g);
    }

    #[test]
    fn invariance_under_rotation_about_z() {
        use nalgebra::{Rotation3, Unit, Vector3};
        let (cloud, _) = gen_plant(&PlantSpec {
            stem_height_m: 0.25,
            stem_tilt_deg: 8.0,
            leaves: vec![LeafSpec {
                attach_frac: 0.45,
                branch_angle_deg: 70.0,
                length_m: 0.09,
                azimuth_deg: 120.0,
            }],
            density_per_m: 2500.0,
            noise_sigma_m: 0.0005,
            seed: 73,
        });
        let config = TraitConfig {
            ground_cover: true,
            ..TraitConfig::default()
        };
        let base = compute_traits(&cloud, "p", &config).unwrap();
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::z()), 1.1);
        let rotated_cloud = cloud.map_positions(|p| rot * p);
        let rotated = compute_traits(&rotated_cloud, "p", &config).unwrap();
        for (a, b) in [
            (base.h_max, rotated.h_max),
            (base.r_max, rotated.r_max),
            (base.v100, rotated.v100),
            (base.v60, rotated.v60),
            (base.v40, rotated.v40),
        ] {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12), "{a} vs {b}");
        }
        let (ga, gb) = (base.g.unwrap(), rotated.g.unwrap());
        // alpha-shape triangulation can flip ties under rotation; the area
        // itself stays put well within per-mille
        assert!((ga - gb).abs() <= 1e-3 * ga);
    }
}
