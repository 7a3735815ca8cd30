//! Deterministic synthetic test objects.
//!
//! Every generator is a pure function of its parameters — no hidden
//! randomness — and emits outward unit normals, so generated clouds can
//! serve as analytic fixtures: the slab is the closed-form aperture test
//! case, the curved shapes provide surface-incompatibility floors shared by
//! all planners, and the offset composite splits the graspable surface away
//! from the object centroid to expose centring behaviour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{serde_vec3, UnitVec3, Vec3};
use crate::surface::{OrientedSurface, PointNormal};

fn zero_vec() -> Vec3 {
    Vec3::zeros()
}

/// Parameterized synthetic object kinds. Dimensions in meters; `resolution`
/// counts points per edge or arc and must be at least 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticObject {
    /// Two parallel square faces `width` apart along y — the analytic
    /// grasping fixture. Faces span `extent × extent` in x/z.
    Slab {
        width: f64,
        extent: f64,
        resolution: usize,
        #[serde(default = "zero_vec", with = "serde_vec3")]
        center: Vec3,
    },
    /// Closed box with all six faces sampled (cell-centred grids).
    Box {
        size: [f64; 3],
        resolution: usize,
        #[serde(default = "zero_vec", with = "serde_vec3")]
        center: Vec3,
    },
    /// Lateral (side) surface of a cylinder with its axis along z.
    Cylinder {
        radius: f64,
        height: f64,
        resolution: usize,
        #[serde(default = "zero_vec", with = "serde_vec3")]
        center: Vec3,
    },
    /// Near-uniform sphere sampling (Fibonacci spiral, `resolution²` points).
    Sphere {
        radius: f64,
        resolution: usize,
        #[serde(default = "zero_vec", with = "serde_vec3")]
        center: Vec3,
    },
    /// Thin plate: a box of `side × thickness × side`.
    Plate {
        side: f64,
        thickness: f64,
        resolution: usize,
        #[serde(default = "zero_vec", with = "serde_vec3")]
        center: Vec3,
    },
    /// Graspable slab plus an off-axis ballast patch whose normals face +x,
    /// outside any ±y matching cone: the ballast shifts the centroid without
    /// offering the fingers anything to grab.
    OffsetComposite {
        slab_width: f64,
        slab_extent: f64,
        #[serde(with = "serde_vec3")]
        ballast_offset: Vec3,
        ballast_extent: f64,
        resolution: usize,
        #[serde(default = "zero_vec", with = "serde_vec3")]
        center: Vec3,
    },
}

impl SyntheticObject {
    fn validate(&self) -> Result<()> {
        let (dims, resolution): (Vec<(&str, f64)>, usize) = match self {
            SyntheticObject::Slab {
                width,
                extent,
                resolution,
                ..
            } => (vec![("width", *width), ("extent", *extent)], *resolution),
            SyntheticObject::Box {
                size, resolution, ..
            } => (
                vec![("size.x", size[0]), ("size.y", size[1]), ("size.z", size[2])],
                *resolution,
            ),
            SyntheticObject::Cylinder {
                radius,
                height,
                resolution,
                ..
            } => (vec![("radius", *radius), ("height", *height)], *resolution),
            SyntheticObject::Sphere {
                radius, resolution, ..
            } => (vec![("radius", *radius)], *resolution),
            SyntheticObject::Plate {
                side,
                thickness,
                resolution,
                ..
            } => (vec![("side", *side), ("thickness", *thickness)], *resolution),
            SyntheticObject::OffsetComposite {
                slab_width,
                slab_extent,
                ballast_extent,
                resolution,
                ..
            } => (
                vec![
                    ("slab_width", *slab_width),
                    ("slab_extent", *slab_extent),
                    ("ballast_extent", *ballast_extent),
                ],
                *resolution,
            ),
        };
        for (name, value) in dims {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "generator dimension {name} = {value} must be positive"
                )));
            }
        }
        if resolution < 2 {
            return Err(Error::InvalidConfig(format!(
                "generator resolution {resolution} must be at least 2"
            )));
        }
        Ok(())
    }

    /// Builds the point cloud. Deterministic; all normals unit length.
    pub fn generate(&self) -> Result<OrientedSurface> {
        self.validate()?;
        let mut points = Vec::new();
        match *self {
            SyntheticObject::Slab {
                width,
                extent,
                resolution,
                center,
            } => {
                push_slab(&mut points, center, width, extent, resolution);
            }
            SyntheticObject::Box {
                size,
                resolution,
                center,
            } => {
                push_box(&mut points, center, size, resolution);
            }
            SyntheticObject::Cylinder {
                radius,
                height,
                resolution,
                center,
            } => {
                for i in 0..resolution {
                    let z = center.z + height * ((i as f64 + 0.5) / resolution as f64 - 0.5);
                    for j in 0..resolution {
                        let angle =
                            std::f64::consts::TAU * (j as f64 + 0.5) / resolution as f64;
                        let normal = Vec3::new(angle.cos(), angle.sin(), 0.0);
                        points.push(PointNormal::new(
                            Vec3::new(
                                center.x + radius * normal.x,
                                center.y + radius * normal.y,
                                z,
                            ),
                            UnitVec3::new(normal).expect("radial direction is unit"),
                        ));
                    }
                }
            }
            SyntheticObject::Sphere {
                radius,
                resolution,
                center,
            } => {
                let count = resolution * resolution;
                let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
                for i in 0..count {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let ring = (1.0 - z * z).sqrt();
                    let angle = golden_angle * i as f64;
                    let normal = Vec3::new(ring * angle.cos(), ring * angle.sin(), z);
                    points.push(PointNormal::new(
                        center + normal * radius,
                        UnitVec3::new(normal).expect("spiral direction is unit"),
                    ));
                }
            }
            SyntheticObject::Plate {
                side,
                thickness,
                resolution,
                center,
            } => {
                push_box(&mut points, center, [side, thickness, side], resolution);
            }
            SyntheticObject::OffsetComposite {
                slab_width,
                slab_extent,
                ballast_offset,
                ballast_extent,
                resolution,
                center,
            } => {
                push_slab(&mut points, center, slab_width, slab_extent, resolution);
                // Ballast patch in the y–z plane, normals +x: visible mass,
                // nothing for a ±y-closing grasp to match.
                let ballast_center = center + ballast_offset;
                let normal = UnitVec3::from_components(1.0, 0.0, 0.0).expect("unit");
                for iy in 0..resolution {
                    for iz in 0..resolution {
                        let frac = |i: usize| {
                            ballast_extent * (i as f64 / (resolution - 1) as f64 - 0.5)
                        };
                        points.push(PointNormal::new(
                            ballast_center + Vec3::new(0.0, frac(iy), frac(iz)),
                            normal,
                        ));
                    }
                }
            }
        }
        Ok(OrientedSurface::new(points))
    }
}

/// Two edge-inclusive parallel faces along ±y.
fn push_slab(
    points: &mut Vec<PointNormal>,
    center: Vec3,
    width: f64,
    extent: f64,
    resolution: usize,
) {
    for face in [-1.0f64, 1.0] {
        let normal = UnitVec3::from_components(0.0, face, 0.0).expect("unit");
        for ix in 0..resolution {
            for iz in 0..resolution {
                let frac = |i: usize| extent * (i as f64 / (resolution - 1) as f64 - 0.5);
                points.push(PointNormal::new(
                    center + Vec3::new(frac(ix), face * width / 2.0, frac(iz)),
                    normal,
                ));
            }
        }
    }
}

/// All six faces of an axis-aligned box, cell-centred so corners and edges
/// are not duplicated.
fn push_box(points: &mut Vec<PointNormal>, center: Vec3, size: [f64; 3], resolution: usize) {
    let half = Vec3::new(size[0] / 2.0, size[1] / 2.0, size[2] / 2.0);
    for axis in 0..3 {
        let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
        for direction in [-1.0f64, 1.0] {
            let mut normal = Vec3::zeros();
            normal[axis] = direction;
            let normal = UnitVec3::new(normal).expect("axis direction is unit");
            for iu in 0..resolution {
                for iv in 0..resolution {
                    let cell = |i: usize, extent: f64| {
                        extent * (2.0 * (i as f64 + 0.5) / resolution as f64 - 1.0)
                    };
                    let mut p = center;
                    p[axis] += direction * half[axis];
                    p[u_axis] += cell(iu, half[u_axis]);
                    p[v_axis] += cell(iv, half[v_axis]);
                    points.push(PointNormal::new(p, normal));
                }
            }
        }
    }
}
