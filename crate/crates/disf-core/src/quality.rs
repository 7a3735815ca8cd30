//! Grasp quality functionals.
//!
//! All functionals evaluate a *candidate* pose update `(omega, t, dd)` on top
//! of the current correspondence state without mutating it; passing zeros
//! evaluates the state as-is. Rotations are materialized exactly through
//! [`rodrigues`] — the first-order approximation is reserved for the solvers'
//! internal linearizations.
//!
//! * [`surface_distance`] — summed squared point-to-plane distances between
//!   transformed finger points and their object partners.
//! * [`normal_misalignment`] — penalizes finger normals that fail to oppose
//!   their partner normals (zero exactly at anti-parallel).
//! * [`approach_misalignment`] — penalizes hand approach axes that deviate
//!   from the requested approach direction (zero exactly at aligned).
//! * [`combined_normal_approach`] — normal + approach terms, approach scaled
//!   by `beta²`.
//! * [`geometric_error`] — surface + normal terms, normals scaled by
//!   `alpha²`; this is the scalar the planners monitor for convergence.
//! * [`com_alignment_error`] — distance between the object centroid and the
//!   centroid of the full fingertip surfaces.

use serde::{Deserialize, Serialize};

use crate::correspondence::CorrespondenceSet;
use crate::error::Result;
use crate::geom::{rodrigues, UnitVec3, Vec3};
use crate::gripper::transform_point_normal;
use crate::surface::{joint_centroid, OrientedSurface};

/// Weights tying the individual functionals together.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    /// Weight of the normal term inside [`geometric_error`] (applied squared).
    pub alpha: f64,
    /// Weight of the approach term inside [`combined_normal_approach`]
    /// (applied squared).
    pub beta: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.8,
        }
    }
}

impl QualityWeights {
    /// Rejects negative or non-finite weights.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(crate::error::Error::InvalidConfig(format!(
                "quality weights must be non-negative (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Summed squared point-to-plane distance of the transformed finger points.
///
/// Each pair contributes `((p' − q) · n_q)²` where `p'` is the finger point
/// under the candidate update `(omega, t, dd)` and `n_q` the object normal.
pub fn surface_distance(
    corr: &CorrespondenceSet,
    omega: &Vec3,
    t: &Vec3,
    dd: f64,
    v: &UnitVec3,
) -> f64 {
    let r = rodrigues(omega);
    corr.iter()
        .map(|pair| {
            let moved = transform_point_normal(&pair.finger_point, &r, t, dd, v, pair.finger);
            let residual = (moved.position - pair.object_point.position)
                .dot(pair.object_point.normal.as_vec());
            residual * residual
        })
        .sum()
}

/// Summed squared normal opposition residual, `((R n_p) · n_q + 1)²`.
pub fn normal_misalignment(corr: &CorrespondenceSet, omega: &Vec3) -> f64 {
    let r = rodrigues(omega);
    corr.iter()
        .map(|pair| {
            let n = pair.finger_point.normal.rotated(&r);
            let residual = n.dot(pair.object_point.normal.as_vec()) + 1.0;
            residual * residual
        })
        .sum()
}

/// Approach alignment penalty, `slots · ((R n_z) · n_app − 1)²`.
///
/// There is a single physical approach axis, but the functional counts it
/// once per correspondence slot so its weight keeps pace with the sums above.
pub fn approach_misalignment(n_z: &UnitVec3, n_app: &UnitVec3, omega: &Vec3, slots: usize) -> f64 {
    let r = rodrigues(omega);
    let residual = n_z.rotated(&r).dot(n_app.as_vec()) - 1.0;
    slots as f64 * residual * residual
}

/// Combined rotational objective: normals plus `beta²`-weighted approach.
pub fn combined_normal_approach(
    corr: &CorrespondenceSet,
    omega: &Vec3,
    n_z: &UnitVec3,
    n_app: &UnitVec3,
    beta: f64,
) -> f64 {
    normal_misalignment(corr, omega)
        + beta * beta * approach_misalignment(n_z, n_app, omega, corr.len())
}

/// Geometric fitting error: surface distance plus `alpha²`-weighted normals.
/// This is the convergence measure monitored by the iterative planners.
pub fn geometric_error(
    corr: &CorrespondenceSet,
    omega: &Vec3,
    t: &Vec3,
    dd: f64,
    v: &UnitVec3,
    alpha: f64,
) -> f64 {
    surface_distance(corr, omega, t, dd, v) + alpha * alpha * normal_misalignment(corr, omega)
}

/// Distance between the object centroid and the centroid of the two
/// fingertip surfaces taken together.
pub fn com_alignment_error(object: &OrientedSurface, fingers: &[OrientedSurface; 2]) -> Result<f64> {
    let object_centroid = object.centroid()?;
    let finger_centroid = joint_centroid(&fingers[0], &fingers[1])?;
    Ok((object_centroid - finger_centroid).norm())
}

/// Snapshot of every quality measure at one planner iteration.
///
/// The composite fields are derived in the constructor, so `e_geom` is always
/// exactly `ep + alpha² · en` and `e_na` exactly `en + beta² · ea`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub ep: f64,
    pub en: f64,
    pub ea: f64,
    pub e_na: f64,
    pub e_geom: f64,
    pub e_com: f64,
    pub iteration: usize,
}

impl QualityReport {
    pub fn new(
        ep: f64,
        en: f64,
        ea: f64,
        weights: &QualityWeights,
        e_com: f64,
        iteration: usize,
    ) -> Self {
        Self {
            ep,
            en,
            ea,
            e_na: en + weights.beta * weights.beta * ea,
            e_geom: ep + weights.alpha * weights.alpha * en,
            e_com,
            iteration,
        }
    }
}

/// Evaluates every functional on the current state (zero candidate update).
///
/// `object_centroid` is the centroid of the object surface; it never changes
/// while the gripper moves, so callers compute it once per fit instead of
/// once per iteration.
pub fn report_current(
    corr: &CorrespondenceSet,
    v: &UnitVec3,
    n_z: &UnitVec3,
    n_app: &UnitVec3,
    weights: &QualityWeights,
    object_centroid: &Vec3,
    fingers: &[OrientedSurface; 2],
    iteration: usize,
) -> Result<QualityReport> {
    let zero = Vec3::zeros();
    let ep = surface_distance(corr, &zero, &zero, 0.0, v);
    let en = normal_misalignment(corr, &zero);
    let ea = approach_misalignment(n_z, n_app, &zero, corr.len());
    let e_com = (object_centroid - joint_centroid(&fingers[0], &fingers[1])?).norm();
    Ok(QualityReport::new(ep, en, ea, weights, e_com, iteration))
}
