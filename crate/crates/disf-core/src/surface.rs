//! Oriented point clouds: positions paired with outward unit normals.
//!
//! Both the object being grasped and the gripper fingertip pads are
//! represented this way. The container is deliberately thin — a `Vec` with
//! invariant-preserving helpers — because the solvers iterate over points far
//! more often than they restructure them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rotation, UnitVec3, Vec3};

/// One sample of an oriented surface: a position and its unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointNormal {
    pub position: Vec3,
    pub normal: UnitVec3,
}

impl PointNormal {
    pub fn new(position: Vec3, normal: UnitVec3) -> Self {
        Self { position, normal }
    }
}

/// An oriented point cloud.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct OrientedSurface {
    points: Vec<PointNormal>,
}

impl OrientedSurface {
    /// Wraps a point list. Empty surfaces are representable (e.g. while
    /// streaming in a file); operations that need points error instead.
    pub fn new(points: Vec<PointNormal>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PointNormal] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [PointNormal] {
        &mut self.points
    }

    pub fn push(&mut self, pn: PointNormal) {
        self.points.push(pn);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PointNormal> {
        self.points.iter()
    }

    /// Point at `index`, or an out-of-range error naming the surface `role`.
    pub fn get(&self, index: usize, role: &str) -> Result<&PointNormal> {
        self.points.get(index).ok_or_else(|| {
            Error::IndexOutOfRange(format!(
                "{role} point {index} (surface has {} points)",
                self.points.len()
            ))
        })
    }

    /// Arithmetic mean of the positions. Errors on an empty surface.
    pub fn centroid(&self) -> Result<Vec3> {
        if self.points.is_empty() {
            return Err(Error::EmptySurface("centroid of empty surface"));
        }
        let sum: Vec3 = self.points.iter().map(|pn| pn.position).sum();
        Ok(sum / self.points.len() as f64)
    }

    /// Applies `p ↦ R p + t` to positions and `n ↦ R n` to normals, in place.
    pub fn rigid_transform(&mut self, r: &Rotation, t: &Vec3) {
        for pn in &mut self.points {
            pn.position = r.apply(&pn.position) + t;
            pn.normal = pn.normal.rotated(r);
        }
    }

    /// Copy of the surface with `p ↦ R p + t` applied.
    pub fn rigid_transformed(&self, r: &Rotation, t: &Vec3) -> OrientedSurface {
        let mut out = self.clone();
        out.rigid_transform(r, t);
        out
    }

    /// Translates every position by `t`, leaving normals untouched.
    pub fn translate(&mut self, t: &Vec3) {
        for pn in &mut self.points {
            pn.position += t;
        }
    }

    /// Concatenated copy of several surfaces, in argument order.
    pub fn concat(surfaces: &[&OrientedSurface]) -> OrientedSurface {
        let mut points = Vec::with_capacity(surfaces.iter().map(|s| s.len()).sum());
        for s in surfaces {
            points.extend_from_slice(&s.points);
        }
        OrientedSurface::new(points)
    }
}

/// Centroid of two surfaces taken together, weighting every point equally.
pub fn joint_centroid(a: &OrientedSurface, b: &OrientedSurface) -> Result<Vec3> {
    let n = a.len() + b.len();
    if n == 0 {
        return Err(Error::EmptySurface("centroid of empty surface pair"));
    }
    let sum: Vec3 = a
        .iter()
        .chain(b.iter())
        .map(|pn| pn.position)
        .sum();
    Ok(sum / n as f64)
}
