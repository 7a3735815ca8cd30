//! Finger-to-object correspondences.
//!
//! Each pair links one fingertip pad point to one object point. Pairs are
//! produced either by nearest-neighbor matching with a normal-opposition
//! filter (the default), or from an explicit pair list loaded from a file,
//! which mirrors how hand-picked contact points are specified for real
//! objects.
//!
//! A pair stores *copies* of both oriented points next to their indices. The
//! solver stages move the finger copies in lockstep with the finger surfaces
//! (see [`CorrespondenceSet::transform_fingers`]); the object side never
//! moves within an iteration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rotation, UnitVec3, Vec3};
use crate::gripper::{transform_point_normal, Finger};
use crate::kdtree::SpatialIndex;
use crate::surface::{OrientedSurface, PointNormal};

/// One finger-point-to-object-point correspondence.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondencePair {
    pub finger: Finger,
    /// Index of the finger point within its finger surface.
    pub finger_index: usize,
    /// Index of the object point within the object surface.
    pub object_index: usize,
    /// Current (posed) finger point.
    pub finger_point: PointNormal,
    /// Object point; fixed for the lifetime of the set.
    pub object_point: PointNormal,
}

/// A set of correspondences covering both fingers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrespondenceSet {
    pairs: Vec<CorrespondencePair>,
}

impl CorrespondenceSet {
    /// Total number of pairs across both fingers.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pair counts per finger, `[finger 1, finger 2]`.
    pub fn per_finger_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for pair in &self.pairs {
            counts[pair.finger.index()] += 1;
        }
        counts
    }

    pub fn pairs(&self) -> &[CorrespondencePair] {
        &self.pairs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CorrespondencePair> {
        self.pairs.iter()
    }

    /// Applies the fingertip transform to every pair's finger side, keeping
    /// the copies consistent with the finger surfaces being moved elsewhere.
    pub fn transform_fingers(&mut self, r: &Rotation, t: &Vec3, dd: f64, v: &UnitVec3) {
        for pair in &mut self.pairs {
            pair.finger_point = transform_point_normal(&pair.finger_point, r, t, dd, v, pair.finger);
        }
    }
}

/// Nearest-neighbor matching with a normal-opposition filter.
///
/// Every point of each posed finger surface is matched to its nearest object
/// point whose normal opposes the finger normal by at least `π −
/// max_normal_angle` (i.e. `n_f · n_o ≤ −cos(max_normal_angle)`). Finger
/// points with no admissible partner are dropped. Errors if either finger
/// ends up with no pairs at all.
///
/// `object_index` must be built over exactly `object`'s points; matching is
/// deterministic, with distance ties resolved to the lowest object index.
pub fn match_nearest(
    fingers: &[OrientedSurface; 2],
    object: &OrientedSurface,
    object_index: &SpatialIndex,
    max_normal_angle: f64,
) -> Result<CorrespondenceSet> {
    if !(0.0..=std::f64::consts::PI).contains(&max_normal_angle) {
        return Err(Error::InvalidConfig(format!(
            "max normal angle must lie in [0, pi] radians (got {max_normal_angle})"
        )));
    }
    if object.is_empty() {
        return Err(Error::EmptySurface("object surface"));
    }
    debug_assert_eq!(object_index.len(), object.len());
    let dot_threshold = -max_normal_angle.cos();
    let mut pairs = Vec::new();
    for finger in Finger::BOTH {
        let surface = &fingers[finger.index()];
        let before = pairs.len();
        // Consecutive pad points are close together, so the previous winner —
        // when it passes this point's filter too — is a tight upper bound
        // that lets the index prune most of its traversal.
        let mut previous: Option<usize> = None;
        for (finger_idx, fp) in surface.iter().enumerate() {
            let n_f = fp.normal.as_vec();
            let seed = previous.filter(|&j| {
                object.points()[j].normal.as_vec().dot(&n_f) <= dot_threshold
            });
            let seed = seed.map(|j| (j, (object.points()[j].position - fp.position).norm_squared()));
            if let Some((object_idx, _)) =
                object_index.nearest_opposing_from(&fp.position, &n_f, dot_threshold, seed)
            {
                previous = Some(object_idx);
                pairs.push(CorrespondencePair {
                    finger,
                    finger_index: finger_idx,
                    object_index: object_idx,
                    finger_point: *fp,
                    object_point: object.points()[object_idx],
                });
            }
        }
        if pairs.len() == before {
            return Err(Error::NoCorrespondence {
                finger: u8::from(finger) as usize,
            });
        }
    }
    Ok(CorrespondenceSet { pairs })
}

/// One entry of an explicit pair list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPair {
    /// Finger label, 1 or 2.
    pub finger: Finger,
    /// Index into that finger's canonical pad.
    pub finger_index: usize,
    /// Index into the object surface.
    pub object_index: usize,
}

/// An explicit correspondence list, as loaded from a pair file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPairSpec {
    /// Free-form object identifier echoed into reports.
    #[serde(default)]
    pub object: Option<String>,
    pub pairs: Vec<FixedPair>,
}

impl FixedPairSpec {
    /// Parses a TOML pair file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|message| Error::ConfigParse {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Parses pair-file TOML from a string.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Resolves the indices against concrete surfaces, producing a set whose
    /// finger copies are read from `fingers` (typically the *posed* pads).
    ///
    /// Errors name the offending entry on out-of-range indices, and both
    /// fingers must appear at least once.
    pub fn resolve(
        &self,
        fingers: &[OrientedSurface; 2],
        object: &OrientedSurface,
    ) -> Result<CorrespondenceSet> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (entry_idx, fixed) in self.pairs.iter().enumerate() {
            let surface = &fingers[fixed.finger.index()];
            let fp = surface
                .get(fixed.finger_index, "finger")
                .map_err(|_| bad_entry(entry_idx, "finger_index", fixed.finger_index, surface.len()))?;
            let op = object
                .get(fixed.object_index, "object")
                .map_err(|_| bad_entry(entry_idx, "object_index", fixed.object_index, object.len()))?;
            pairs.push(CorrespondencePair {
                finger: fixed.finger,
                finger_index: fixed.finger_index,
                object_index: fixed.object_index,
                finger_point: *fp,
                object_point: *op,
            });
        }
        let set = CorrespondenceSet { pairs };
        let counts = set.per_finger_counts();
        for finger in Finger::BOTH {
            if counts[finger.index()] == 0 {
                return Err(Error::NoCorrespondence {
                    finger: u8::from(finger) as usize,
                });
            }
        }
        Ok(set)
    }
}

fn bad_entry(entry: usize, field: &str, value: usize, len: usize) -> Error {
    Error::IndexOutOfRange(format!(
        "pair entry {entry}: {field} = {value}, but the surface has {len} points"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gripper::{GripperModel, PadConfig};

    fn unit(x: f64, y: f64, z: f64) -> UnitVec3 {
        UnitVec3::from_components(x, y, z).unwrap()
    }

    fn pn(p: Vec3, n: UnitVec3) -> PointNormal {
        PointNormal::new(p, n)
    }

    /// Two parallel faces, normals ±y outward, sampled on a grid.
    fn slab_faces(center: Vec3, half_gap: f64, half_extent: f64, n: usize) -> OrientedSurface {
        let mut points = Vec::new();
        for face_sign in [-1.0, 1.0] {
            let normal = unit(0.0, face_sign, 0.0);
            for i in 0..n {
                for k in 0..n {
                    let x = half_extent * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
                    let z = half_extent * (2.0 * k as f64 / (n - 1) as f64 - 1.0);
                    points.push(pn(
                        center + Vec3::new(x, face_sign * half_gap, z),
                        normal,
                    ));
                }
            }
        }
        OrientedSurface::new(points)
    }

    /// Brute-force matcher oracle: same filter, written as a plain loop.
    fn brute_force_match(
        fingers: &[OrientedSurface; 2],
        object: &OrientedSurface,
        max_normal_angle: f64,
    ) -> Vec<(Finger, usize, usize)> {
        let threshold = -max_normal_angle.cos();
        let mut out = Vec::new();
        for finger in Finger::BOTH {
            for (fi, fp) in fingers[finger.index()].iter().enumerate() {
                let mut best: Option<(usize, f64)> = None;
                for (oi, op) in object.iter().enumerate() {
                    if fp.normal.dot(op.normal.as_vec()) > threshold {
                        continue;
                    }
                    let d2 = (op.position - fp.position).norm_squared();
                    if best.map_or(true, |(_, bd2)| d2 < bd2) {
                        best = Some((oi, d2));
                    }
                }
                if let Some((oi, _)) = best {
                    out.push((finger, fi, oi));
                }
            }
        }
        out
    }

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn slab_matching_pairs_each_finger_with_its_facing_side() {
        let gripper = GripperModel::default_parallel();
        let fingers = gripper.posed_fingers(
            &Rotation::identity(),
            &Vec3::zeros(),
            0.091,
        );
        let object = slab_faces(Vec3::zeros(), 0.015, 0.02, 9);
        let index = SpatialIndex::build(object.points());
        let set = match_nearest(&fingers, &object, &index, deg(60.0)).unwrap();
        assert_eq!(set.per_finger_counts(), [25, 25]);
        for pair in set.iter() {
            // Finger 1 sits on the −y side with inward normal +y, so it must
            // land on the lower face (outward −y); finger 2 mirrors it.
            let expected_face = pair.finger.sign();
            assert_eq!(pair.object_point.normal.as_vec().y, expected_face);
            // The matched point is the one directly beneath: same x/z cell.
            assert!((pair.object_point.position.x - pair.finger_point.position.x).abs() < 2.6e-3);
            assert!((pair.object_point.position.z - pair.finger_point.position.z).abs() < 2.6e-3);
        }
    }

    #[test]
    fn matcher_agrees_with_brute_force_oracle() {
        let gripper = GripperModel::parallel_pads(
            &PadConfig {
                width: 0.03,
                height: 0.025,
                cols: 4,
                rows: 3,
            },
            unit(0.0, 1.0, 0.0),
            unit(0.0, 0.0, 1.0),
            0.011,
            0.091,
        )
        .unwrap();
        let r = crate::geom::rodrigues(&Vec3::new(0.2, -0.1, 0.35));
        let fingers = gripper.posed_fingers(&r, &Vec3::new(0.01, -0.02, 0.04), 0.07);
        let object = slab_faces(Vec3::new(0.015, -0.01, 0.03), 0.02, 0.03, 7);
        let index = SpatialIndex::build(object.points());
        let set = match_nearest(&fingers, &object, &index, deg(60.0)).unwrap();
        let oracle = brute_force_match(&fingers, &object, deg(60.0));
        let got: Vec<(Finger, usize, usize)> = set
            .iter()
            .map(|p| (p.finger, p.finger_index, p.object_index))
            .collect();
        assert_eq!(got, oracle);
    }

    #[test]
    fn parallel_normals_are_rejected_entirely() {
        let gripper = GripperModel::default_parallel();
        let fingers = gripper.posed_fingers(&Rotation::identity(), &Vec3::zeros(), 0.05);
        // All object normals along +y: parallel to finger 1, anti-parallel to
        // finger 2 — with a zero opposition budget finger 1 finds nothing.
        let object = OrientedSurface::new(
            (0..10)
                .map(|i| pn(Vec3::new(i as f64 * 0.01, 0.0, 0.0), unit(0.0, 1.0, 0.0)))
                .collect(),
        );
        let index = SpatialIndex::build(object.points());
        let err = match_nearest(&fingers, &object, &index, 0.0).unwrap_err();
        assert!(matches!(err, Error::NoCorrespondence { finger: 1 }));
    }

    #[test]
    fn angle_budget_widens_admissibility() {
        let gripper = GripperModel::default_parallel();
        let fingers = gripper.posed_fingers(&Rotation::identity(), &Vec3::zeros(), 0.05);
        // Normals tilted 45° away from −y / +y: admissible at 60°, not at 30°.
        let tilt = std::f64::consts::FRAC_1_SQRT_2;
        let object = OrientedSurface::new(vec![
            pn(Vec3::new(0.0, -0.01, 0.0), unit(tilt, -tilt, 0.0)),
            pn(Vec3::new(0.0, 0.01, 0.0), unit(tilt, tilt, 0.0)),
        ]);
        let index = SpatialIndex::build(object.points());
        assert!(match_nearest(&fingers, &object, &index, deg(60.0)).is_ok());
        assert!(match_nearest(&fingers, &object, &index, deg(30.0)).is_err());
    }

    #[test]
    fn distance_ties_pick_lowest_object_index() {
        let gripper = GripperModel::parallel_pads(
            &PadConfig {
                width: 0.01,
                height: 0.01,
                cols: 1,
                rows: 1,
            },
            unit(0.0, 1.0, 0.0),
            unit(0.0, 0.0, 1.0),
            0.011,
            0.091,
        )
        .unwrap();
        let fingers = gripper.posed_fingers(&Rotation::identity(), &Vec3::zeros(), 0.02);
        // Finger 1 sits at y = −0.01. Two object points at equal distance.
        let object = OrientedSurface::new(vec![
            pn(Vec3::new(0.05, -0.01, 0.0), unit(0.0, -1.0, 0.0)),
            pn(Vec3::new(-0.05, -0.01, 0.0), unit(0.0, -1.0, 0.0)),
            pn(Vec3::new(0.0, 0.01, 0.0), unit(0.0, 1.0, 0.0)),
        ]);
        let index = SpatialIndex::build(object.points());
        let set = match_nearest(&fingers, &object, &index, deg(60.0)).unwrap();
        let finger1 = set.iter().find(|p| p.finger == Finger::One).unwrap();
        assert_eq!(finger1.object_index, 0);
    }

    #[test]
    fn fixed_pairs_parse_resolve_and_validate() {
        let text = r#"
            object = "slab"
            pairs = [
                { finger = 1, finger_index = 0, object_index = 0 },
                { finger = 1, finger_index = 2, object_index = 1 },
                { finger = 2, finger_index = 0, object_index = 2 },
            ]
        "#;
        let spec = FixedPairSpec::parse(text).unwrap();
        assert_eq!(spec.object.as_deref(), Some("slab"));
        assert_eq!(spec.pairs.len(), 3);

        let gripper = GripperModel::default_parallel();
        let fingers = gripper.posed_fingers(&Rotation::identity(), &Vec3::zeros(), 0.05);
        let object = slab_faces(Vec3::zeros(), 0.01, 0.01, 2);
        let set = spec.resolve(&fingers, &object).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.per_finger_counts(), [2, 1]);
        assert_eq!(set.pairs()[1].finger_point, fingers[0].points()[2]);

        // Out-of-range object index names the entry.
        let bad = FixedPairSpec {
            object: None,
            pairs: vec![FixedPair {
                finger: Finger::One,
                finger_index: 0,
                object_index: 999,
            }],
        };
        let err = bad.resolve(&fingers, &object).unwrap_err();
        assert!(err.to_string().contains("entry 0"), "got: {err}");

        // A list covering only one finger is rejected.
        let one_sided = FixedPairSpec {
            object: None,
            pairs: vec![FixedPair {
                finger: Finger::One,
                finger_index: 0,
                object_index: 0,
            }],
        };
        assert!(matches!(
            one_sided.resolve(&fingers, &object),
            Err(Error::NoCorrespondence { finger: 2 })
        ));
    }

    #[test]
    fn bad_finger_label_fails_to_parse() {
        let text = r#"pairs = [ { finger = 3, finger_index = 0, object_index = 0 } ]"#;
        let err = FixedPairSpec::parse(text).unwrap_err();
        assert!(err.contains("finger label 3"), "got: {err}");
    }

    #[test]
    fn transform_fingers_moves_only_the_finger_side() {
        let gripper = GripperModel::default_parallel();
        let fingers = gripper.posed_fingers(&Rotation::identity(), &Vec3::zeros(), 0.05);
        let object = slab_faces(Vec3::zeros(), 0.015, 0.02, 5);
        let index = SpatialIndex::build(object.points());
        let mut set = match_nearest(&fingers, &object, &index, deg(60.0)).unwrap();
        let before: Vec<PointNormal> = set.iter().map(|p| p.object_point).collect();
        let t = Vec3::new(0.01, 0.02, -0.005);
        set.transform_fingers(&Rotation::identity(), &t, 0.0, gripper.v0());
        for (pair, old_object) in set.iter().zip(before) {
            assert_eq!(pair.object_point, old_object);
        }
        let expected = fingers[0].points()[set.pairs()[0].finger_index].position + t;
        assert_eq!(set.pairs()[0].finger_point.position, expected);
    }
}
