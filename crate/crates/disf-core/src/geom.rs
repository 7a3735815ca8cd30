//! Minimal 3-D geometry layer: vectors, validated unit vectors, validated
//! rotation matrices, and the axis-angle conversions the solvers rely on.
//!
//! Conventions used throughout the crate:
//!
//! * `skew(w)` is the antisymmetric cross-product matrix, `skew(w) * x == w × x`.
//! * `rodrigues(w)` is the exact axis-angle-to-matrix conversion; the rotation
//!   angle is `‖w‖` and the axis is `w / ‖w‖`.
//! * `small_rotation(w) = I + skew(w)` is the first-order approximation used
//!   when *linearizing* objectives. It is deliberately not orthonormal; exact
//!   poses are always materialized through [`rodrigues`].

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// 3-vector of `f64`. Plain alias: positions, translations and axis-angle
/// parameters share this representation.
pub type Vec3 = nalgebra::Vector3<f64>;

/// 3×3 matrix of `f64`.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Norm below which a vector cannot be meaningfully normalized.
const ZERO_NORM_THRESHOLD: f64 = 1e-12;

/// Norm deviation from 1 beyond which a would-be unit vector is renormalized.
const UNIT_NORM_SLACK: f64 = 1e-9;

/// Frobenius tolerance for the rotation-matrix orthonormality check.
const ROTATION_ORTHO_TOL: f64 = 1e-9;

/// Angle below which an axis-angle vector is treated as the identity rotation.
const TINY_ANGLE: f64 = 1e-12;

/// A direction: a 3-vector guaranteed to have unit norm.
///
/// Construction renormalizes inputs whose norm strays from 1 by more than
/// `1e-9` and rejects near-zero inputs outright, so downstream code can use
/// the wrapped vector without re-checking.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Wraps `v`, renormalizing if needed. Errors if `‖v‖ < 1e-12`.
    pub fn new(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm < ZERO_NORM_THRESHOLD {
            return Err(Error::ZeroVector(norm));
        }
        if (norm - 1.0).abs() > UNIT_NORM_SLACK {
            Ok(Self(v / norm))
        } else {
            Ok(Self(v))
        }
    }

    /// Convenience constructor from components.
    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vec3::new(x, y, z))
    }

    /// The wrapped unit vector.
    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    /// Copy of the wrapped unit vector.
    pub fn into_vec(self) -> Vec3 {
        self.0
    }

    /// Rotates the direction, renormalizing to absorb floating-point drift.
    pub fn rotated(&self, r: &Rotation) -> UnitVec3 {
        let v = r.matrix() * self.0;
        // A rotation cannot annihilate a unit vector, so this cannot fail.
        UnitVec3(v / v.norm())
    }

    /// Dot product against a plain vector.
    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0.dot(other)
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

impl Serialize for UnitVec3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.x, self.0.y, self.0.z].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnitVec3 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(deserializer)?;
        UnitVec3::from_components(x, y, z).map_err(D::Error::custom)
    }
}

/// A validated rotation matrix: orthonormal with determinant +1.
///
/// Instances are only produced by constructors that guarantee the invariant
/// ([`Rotation::identity`], [`rodrigues`], composition, or the checked
/// [`Rotation::from_matrix`]), so multiplying and transposing never re-checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    /// The identity rotation.
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates that `m` is orthonormal (`‖MᵀM − I‖_F < 1e-9`) with
    /// determinant within `1e-9` of +1, and wraps it.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if !ortho.is_finite() || ortho >= ROTATION_ORTHO_TOL || (det - 1.0).abs() >= ROTATION_ORTHO_TOL
        {
            return Err(Error::NotARotation { ortho, det });
        }
        Ok(Self(m))
    }

    /// Internal constructor for matrices that are rotations by construction.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        debug_assert!(
            (m.transpose() * m - Mat3::identity()).norm() < 1e-7,
            "constructed matrix is not orthonormal"
        );
        Self(m)
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Inverse rotation (transpose).
    pub fn inverse(&self) -> Rotation {
        Self(self.0.transpose())
    }

    /// Applies the rotation to a vector.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Frobenius distance of `RᵀR` from the identity; diagnostic for tests
    /// and fuzzing, not consulted on the hot path.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }

    /// Determinant of the underlying matrix.
    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for Rotation {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Serialize for Rotation {
    /// Serializes as the 9 entries in row-major order.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let e = <[f64; 9]>::deserialize(deserializer)?;
        let m = Mat3::new(e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8]);
        Rotation::from_matrix(m).map_err(D::Error::custom)
    }
}

/// Antisymmetric cross-product matrix: `skew(w) * x == w.cross(&x)`.
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Exact axis-angle to rotation-matrix conversion.
///
/// `R = I + sin θ [u]_× + (1 − cos θ) [u]_×²` with `θ = ‖w‖`, `u = w/θ`.
/// Angles below `1e-12` collapse to the identity, which keeps the conversion
/// well defined for the zero updates produced by converged solvers.
pub fn rodrigues(w: &Vec3) -> Rotation {
    let theta = w.norm();
    if theta < TINY_ANGLE {
        return Rotation::identity();
    }
    let k = skew(&(w / theta));
    let m = Mat3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
    Rotation::from_matrix_unchecked(m)
}

/// First-order rotation approximation `I + skew(w)`, used only to linearize
/// objectives. Not orthonormal; see [`rodrigues`] for exact poses.
pub fn small_rotation(w: &Vec3) -> Mat3 {
    Mat3::identity() + skew(w)
}

/// Serde adapter fixing the wire shape of a plain [`Vec3`] to `[x, y, z]`,
/// for use with `#[serde(with = "serde_vec3")]`.
pub mod serde_vec3 {
    use super::Vec3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec3, serializer: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec3, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(deserializer)?;
        Ok(Vec3::new(x, y, z))
    }
}
