//! Two-finger parallel gripper model and the fingertip transform.
//!
//! Geometry conventions:
//!
//! * `v0` is the canonical closing axis, pointing from finger 1 toward
//!   finger 2. `n_z0` is the canonical approach axis of the hand. The two are
//!   required to be orthogonal.
//! * The canonical fingertip pads are both centered on the origin: the pose
//!   transform alone creates the physical opening. Placing the gripper at
//!   rotation `R`, translation `t` and aperture `d` maps a canonical finger
//!   point `p` to `R p + t ± 0.5 d (R v0)`, with the minus sign for finger 1
//!   and the plus sign for finger 2. The fingers therefore always move
//!   symmetrically about the hand center, and the pad separation equals the
//!   aperture argument exactly.
//! * The same map applied with a *relative* displacement `dd` to already
//!   posed surfaces (`R = I`, `t = 0`) widens (`dd > 0`) or narrows
//!   (`dd < 0`) the current opening by `dd`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rotation, UnitVec3, Vec3};
use crate::surface::{OrientedSurface, PointNormal};

/// Maximum tolerated deviation from orthogonality between `v0` and `n_z0`.
const AXES_ORTHO_TOL: f64 = 1e-6;

/// Identifies one of the two fingers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Finger {
    One,
    Two,
}

impl Finger {
    pub const BOTH: [Finger; 2] = [Finger::One, Finger::Two];

    /// Sign of the aperture displacement: −1 for finger 1, +1 for finger 2.
    pub fn sign(self) -> f64 {
        match self {
            Finger::One => -1.0,
            Finger::Two => 1.0,
        }
    }

    /// Zero-based index, e.g. for array storage.
    pub fn index(self) -> usize {
        match self {
            Finger::One => 0,
            Finger::Two => 1,
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(Finger::One),
            1 => Ok(Finger::Two),
            other => Err(Error::InvalidConfig(format!(
                "finger index {other} (expected 0 or 1)"
            ))),
        }
    }
}

impl TryFrom<u8> for Finger {
    type Error = String;

    /// One-based, matching the j ∈ {1, 2} labelling used in pair files.
    fn try_from(value: u8) -> std::result::Result<Self, String> {
        match value {
            1 => Ok(Finger::One),
            2 => Ok(Finger::Two),
            other => Err(format!("finger label {other} (expected 1 or 2)")),
        }
    }
}

impl From<Finger> for u8 {
    fn from(f: Finger) -> u8 {
        match f {
            Finger::One => 1,
            Finger::Two => 2,
        }
    }
}

impl std::fmt::Display for Finger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Applies the fingertip transform to a single oriented point.
///
/// Position: `R p + t + 0.5 · sign(finger) · dd · (R v)`; normal: `R n`.
pub fn transform_point_normal(
    pn: &PointNormal,
    r: &Rotation,
    t: &Vec3,
    dd: f64,
    v: &UnitVec3,
    finger: Finger,
) -> PointNormal {
    let offset = r.apply(v.as_vec()) * (0.5 * finger.sign() * dd);
    PointNormal {
        position: r.apply(&pn.position) + t + offset,
        normal: pn.normal.rotated(r),
    }
}

/// Applies the fingertip transform to every point of one finger surface.
pub fn transform_surface(
    surface: &OrientedSurface,
    r: &Rotation,
    t: &Vec3,
    dd: f64,
    v: &UnitVec3,
    finger: Finger,
) -> OrientedSurface {
    OrientedSurface::new(
        surface
            .iter()
            .map(|pn| transform_point_normal(pn, r, t, dd, v, finger))
            .collect(),
    )
}

/// Rectangular-pad construction parameters for [`GripperModel::parallel_pads`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadConfig {
    /// Pad extent (m) along the in-plane axis `v0 × n_z0`.
    pub width: f64,
    /// Pad extent (m) along the approach axis `n_z0`.
    pub height: f64,
    /// Sample count along the width. `1` collapses to the pad center line.
    pub cols: usize,
    /// Sample count along the height.
    pub rows: usize,
}

impl Default for PadConfig {
    fn default() -> Self {
        Self {
            width: 0.02,
            height: 0.02,
            cols: 5,
            rows: 5,
        }
    }
}

/// The gripper: canonical fingertip surfaces plus kinematic limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGripperModel")]
pub struct GripperModel {
    fingers: [OrientedSurface; 2],
    v0: UnitVec3,
    n_z0: UnitVec3,
    d_min: f64,
    d_max: f64,
}

/// Unvalidated mirror used to funnel deserialization through [`GripperModel::new`].
#[derive(Deserialize)]
struct RawGripperModel {
    fingers: [OrientedSurface; 2],
    v0: UnitVec3,
    n_z0: UnitVec3,
    d_min: f64,
    d_max: f64,
}

impl TryFrom<RawGripperModel> for GripperModel {
    type Error = Error;

    fn try_from(raw: RawGripperModel) -> Result<Self> {
        GripperModel::new(raw.fingers, raw.v0, raw.n_z0, raw.d_min, raw.d_max)
    }
}

impl GripperModel {
    /// Validates and assembles a gripper from explicit canonical surfaces.
    ///
    /// Requirements: both pads non-empty, `0 ≤ d_min < d_max`, finite limits,
    /// and `v0 ⟂ n_z0` within `1e-6`.
    pub fn new(
        fingers: [OrientedSurface; 2],
        v0: UnitVec3,
        n_z0: UnitVec3,
        d_min: f64,
        d_max: f64,
    ) -> Result<Self> {
        if fingers[0].is_empty() || fingers[1].is_empty() {
            return Err(Error::EmptySurface("gripper fingertip pad"));
        }
        if !d_min.is_finite() || !d_max.is_finite() || d_min < 0.0 || d_min >= d_max {
            return Err(Error::InvalidConfig(format!(
                "aperture limits must satisfy 0 <= d_min < d_max (got [{d_min}, {d_max}])"
            )));
        }
        let skewness = v0.dot(n_z0.as_vec()).abs();
        if skewness > AXES_ORTHO_TOL {
            return Err(Error::InvalidConfig(format!(
                "closing axis v0 and approach axis n_z0 must be orthogonal \
                 (|v0 · n_z0| = {skewness:.3e})"
            )));
        }
        Ok(Self {
            fingers,
            v0,
            n_z0,
            d_min,
            d_max,
        })
    }

    /// Builds the default parallel gripper: two flat rectangular pads facing
    /// each other along `v0`, sampled on a regular grid.
    ///
    /// Pad normals point inward (finger 1 along `+v0`, finger 2 along `−v0`),
    /// i.e. toward the object once the gripper is opened around it.
    pub fn parallel_pads(
        pad: &PadConfig,
        v0: UnitVec3,
        n_z0: UnitVec3,
        d_min: f64,
        d_max: f64,
    ) -> Result<Self> {
        if !(pad.width > 0.0) || !(pad.height > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pad dimensions must be positive (got {} x {})",
                pad.width, pad.height
            )));
        }
        if pad.cols == 0 || pad.rows == 0 {
            return Err(Error::InvalidConfig(
                "pad resolution must be at least 1 x 1".to_string(),
            ));
        }
        let u = UnitVec3::new(v0.cross(n_z0.as_vec()))?;
        let grid_coords = |extent: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                vec![0.0]
            } else {
                (0..n)
                    .map(|i| extent * (i as f64 / (n - 1) as f64 - 0.5))
                    .collect()
            }
        };
        let xs = grid_coords(pad.width, pad.cols);
        let zs = grid_coords(pad.height, pad.rows);
        let make_pad = |inward: Vec3| -> Result<OrientedSurface> {
            let normal = UnitVec3::new(inward)?;
            let mut points = Vec::with_capacity(xs.len() * zs.len());
            for z in &zs {
                for x in &xs {
                    points.push(PointNormal::new(*u.as_vec() * *x + *n_z0.as_vec() * *z, normal));
                }
            }
            Ok(OrientedSurface::new(points))
        };
        let fingers = [make_pad(*v0.as_vec())?, make_pad(-*v0.as_vec())?];
        Self::new(fingers, v0, n_z0, d_min, d_max)
    }

    /// Default gripper with the stock pad geometry and aperture limits.
    pub fn default_parallel() -> GripperModel {
        // Unwrap is fine: the constants below satisfy every constructor check.
        Self::parallel_pads(
            &PadConfig::default(),
            UnitVec3::from_components(0.0, 1.0, 0.0).unwrap(),
            UnitVec3::from_components(0.0, 0.0, 1.0).unwrap(),
            0.011,
            0.091,
        )
        .unwrap()
    }

    /// Canonical (origin-centered, zero-separation) surface of one finger.
    pub fn canonical_finger(&self, finger: Finger) -> &OrientedSurface {
        &self.fingers[finger.index()]
    }

    pub fn v0(&self) -> &UnitVec3 {
        &self.v0
    }

    pub fn n_z0(&self) -> &UnitVec3 {
        &self.n_z0
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Both finger surfaces posed at rotation `r`, translation `t`, and
    /// absolute aperture `d`.
    pub fn posed_fingers(&self, r: &Rotation, t: &Vec3, d: f64) -> [OrientedSurface; 2] {
        [
            transform_surface(&self.fingers[0], r, t, d, &self.v0, Finger::One),
            transform_surface(&self.fingers[1], r, t, d, &self.v0, Finger::Two),
        ]
    }

    /// Clamps a candidate aperture into `[d_min, d_max]`.
    pub fn clamp_aperture(&self, d: f64) -> f64 {
        d.clamp(self.d_min, self.d_max)
    }
}

/// Live pose of the gripper while a planner iterates.
///
/// `v` and `n_z` mirror the canonical axes under the current rotation; they
/// are updated incrementally by the solver stages and must stay consistent
/// with `rotation` (see [`GripperState::axis_consistency_error`]).
#[derive(Clone, Debug)]
pub struct GripperState {
    pub rotation: Rotation,
    pub translation: Vec3,
    /// Current absolute aperture (m).
    pub aperture: f64,
    /// Current closing axis, `rotation · v0`.
    pub v: UnitVec3,
    /// Current approach axis, `rotation · n_z0`.
    pub n_z: UnitVec3,
}

impl GripperState {
    /// State for a gripper posed at `(r0, t0)` with aperture `d0`.
    pub fn initial(model: &GripperModel, r0: &Rotation, t0: &Vec3, d0: f64) -> Result<Self> {
        if !(model.d_min()..=model.d_max()).contains(&d0) {
            return Err(Error::InvalidConfig(format!(
                "initial aperture {d0} outside [{}, {}]",
                model.d_min(),
                model.d_max()
            )));
        }
        Ok(Self {
            rotation: *r0,
            translation: *t0,
            aperture: d0,
            v: model.v0().rotated(r0),
            n_z: model.n_z0().rotated(r0),
        })
    }

    /// How far the cached axes have drifted from `rotation` applied to the
    /// canonical axes. Diagnostic for tests.
    pub fn axis_consistency_error(&self, model: &GripperModel) -> f64 {
        let v_err = (*self.v.as_vec() - *model.v0().rotated(&self.rotation).as_vec()).norm();
        let nz_err = (*self.n_z.as_vec() - *model.n_z0().rotated(&self.rotation).as_vec()).norm();
        v_err.max(nz_err)
    }
}
