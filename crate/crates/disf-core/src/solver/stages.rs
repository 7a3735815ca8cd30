//! The three disentangled fitting stages.
//!
//! Each stage solves for exactly one component of the grasp pose and applies
//! it immediately to the working state (finger surfaces, correspondence
//! copies, and cached axes):
//!
//! 1. [`rotation_stage`] — a 3-unknown linearized least squares over the
//!    normal-opposition and approach-alignment residuals; the solved
//!    axis-angle step is materialized exactly and applied *about the
//!    coordinate origin*.
//! 2. [`translation_stage`] — closed form: move the fingers so their joint
//!    centroid lands on the object centroid.
//! 3. [`aperture_stage`] — a scalar least squares for the opening change that
//!    best closes the point-to-plane gaps, clamped to the aperture limits.
//!
//! Keeping the stages separate is the point: rotation never fights
//! translation for the same residuals, and the centroid move is immune to the
//! contact geometry entirely.

use crate::correspondence::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geom::{rodrigues, UnitVec3, Vec3};
use crate::gripper::{transform_surface, Finger, GripperModel};
use crate::lstsq::{LeastSquaresSystem, NormalAccumulator};
use crate::surface::{joint_centroid, OrientedSurface};

/// Threshold on `Σ aᵢ²` below which the aperture direction is degenerate.
const APERTURE_DEGENERACY_THRESHOLD: f64 = 1e-15;

/// Working geometry while a planner iterates: the two posed fingertip
/// surfaces plus the rotated gripper axes and the current opening.
#[derive(Clone, Debug)]
pub struct FitState {
    /// Posed fingertip surfaces, `[finger 1, finger 2]`.
    pub fingers: [OrientedSurface; 2],
    /// Current closing axis (finger 1 toward finger 2).
    pub v: UnitVec3,
    /// Current approach axis of the hand.
    pub n_z: UnitVec3,
    /// Current absolute aperture (m).
    pub aperture: f64,
}

impl FitState {
    /// Poses the gripper at `(r0, t0)` with aperture `d0`.
    pub fn initial(
        model: &GripperModel,
        r0: &crate::geom::Rotation,
        t0: &Vec3,
        d0: f64,
    ) -> Result<Self> {
        if !(model.d_min()..=model.d_max()).contains(&d0) {
            return Err(Error::InvalidConfig(format!(
                "initial aperture {d0} outside [{}, {}]",
                model.d_min(),
                model.d_max()
            )));
        }
        Ok(Self {
            fingers: model.posed_fingers(r0, t0, d0),
            v: model.v0().rotated(r0),
            n_z: model.n_z0().rotated(r0),
            aperture: d0,
        })
    }
}

/// Emits the rows of the linearized rotation system.
///
/// One row per pair — cross-product coefficients `n_p × n_q` against
/// right-hand side `−(n_p · n_q + 1)` — plus a single `beta`-scaled approach
/// row `beta (n_z × n_app)` against `−beta (n_z · n_app − 1)`. The approach
/// direction appears once no matter how many pairs there are.
fn rotation_rows(
    corr: &CorrespondenceSet,
    n_z: &UnitVec3,
    n_app: &UnitVec3,
    beta: f64,
    mut emit: impl FnMut(Vec3, f64),
) {
    for pair in corr.iter() {
        let n_p = pair.finger_point.normal.as_vec();
        let n_q = pair.object_point.normal.as_vec();
        emit(n_p.cross(n_q), -(n_p.dot(n_q) + 1.0));
    }
    emit(
        n_z.cross(n_app.as_vec()) * beta,
        -beta * (n_z.dot(n_app.as_vec()) - 1.0),
    );
}

/// The stacked form of [`rotation_rows`], for oracles and diagnostics. The
/// stage itself folds the same rows into a [`NormalAccumulator`].
pub fn rotation_system(
    corr: &CorrespondenceSet,
    n_z: &UnitVec3,
    n_app: &UnitVec3,
    beta: f64,
) -> LeastSquaresSystem {
    let mut system = LeastSquaresSystem::new(3);
    rotation_rows(corr, n_z, n_app, beta, |a, b| {
        system.push_row(&[a.x, a.y, a.z], b);
    });
    system
}

/// Rotation stage: solves for the axis-angle step aligning contact normals
/// (and the approach axis), then rotates the whole working state about the
/// coordinate origin. Returns the solved step.
pub fn rotation_stage(
    state: &mut FitState,
    corr: &mut CorrespondenceSet,
    n_app: &UnitVec3,
    beta: f64,
    lambda: f64,
) -> Result<Vec3> {
    let mut normal = NormalAccumulator::<3>::new();
    rotation_rows(corr, &state.n_z, n_app, beta, |a, b| {
        normal.add_row(a, b);
    });
    let solution = normal.solve(lambda, "rotation stage")?;
    let omega = Vec3::new(solution[0], solution[1], solution[2]);
    let r = rodrigues(&omega);
    for finger in &mut state.fingers {
        finger.rigid_transform(&r, &Vec3::zeros());
    }
    corr.transform_fingers(&r, &Vec3::zeros(), 0.0, &state.v);
    state.v = state.v.rotated(&r);
    state.n_z = state.n_z.rotated(&r);
    Ok(omega)
}

/// Translation stage: closed-form centroid alignment. Moves the fingers by
/// `centroid(object) − centroid(fingers)` and returns that step. The object
/// centroid is fixed for the whole fit, so it is taken precomputed.
pub fn translation_stage(
    state: &mut FitState,
    corr: &mut CorrespondenceSet,
    object_centroid: &Vec3,
) -> Result<Vec3> {
    let t = object_centroid - joint_centroid(&state.fingers[0], &state.fingers[1])?;
    for finger in &mut state.fingers {
        finger.translate(&t);
    }
    corr.transform_fingers(&crate::geom::Rotation::identity(), &t, 0.0, &state.v);
    Ok(t)
}

/// Unclamped scalar least-squares estimate of the aperture change.
///
/// Opening by `dd` moves finger `j` by `0.5 · sign_j · dd · v`, so each
/// point-to-plane residual becomes `(p − q)·n_q + 0.5 · sign_j · dd ·
/// (v·n_q)`. Writing it as `b − a·dd` with `a = −0.5 · sign_j · (v·n_q)` and
/// `b = (p − q)·n_q`, the minimizer of `Σ (b − a·dd)²` is `Σ a b / Σ a²`.
///
/// Errors with [`Error::DegenerateAperture`] when `Σ a² < 1e-15`, i.e. every
/// object normal is orthogonal to the closing axis.
pub fn aperture_estimate(corr: &CorrespondenceSet, v: &UnitVec3) -> Result<f64> {
    let mut sum_ab = 0.0;
    let mut sum_aa = 0.0;
    for pair in corr.iter() {
        let n_q = pair.object_point.normal.as_vec();
        let a = -0.5 * pair.finger.sign() * v.dot(n_q);
        let b = (pair.finger_point.position - pair.object_point.position).dot(n_q);
        sum_ab += a * b;
        sum_aa += a * a;
    }
    if sum_aa < APERTURE_DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateAperture);
    }
    Ok(sum_ab / sum_aa)
}

/// Clamps a candidate aperture step so `aperture + dd` stays in
/// `[d_min, d_max]`.
pub fn clamp_aperture_step(dd_hat: f64, aperture: f64, d_min: f64, d_max: f64) -> f64 {
    dd_hat.clamp(d_min - aperture, d_max - aperture)
}

/// Aperture stage: estimates, clamps, and applies the opening change.
/// Returns the applied (clamped) step. The state is untouched on error.
pub fn aperture_stage(
    state: &mut FitState,
    corr: &mut CorrespondenceSet,
    d_min: f64,
    d_max: f64,
) -> Result<f64> {
    let dd_hat = aperture_estimate(corr, &state.v)?;
    let dd = clamp_aperture_step(dd_hat, state.aperture, d_min, d_max);
    let identity = crate::geom::Rotation::identity();
    for finger in Finger::BOTH {
        state.fingers[finger.index()] = transform_surface(
            &state.fingers[finger.index()],
            &identity,
            &Vec3::zeros(),
            dd,
            &state.v,
            finger,
        );
    }
    corr.transform_fingers(&identity, &Vec3::zeros(), dd, &state.v);
    state.aperture += dd;
    Ok(dd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{FixedPair, FixedPairSpec};
    use crate::quality::{geometric_error, surface_distance};
    use crate::surface::PointNormal;
    use approx::assert_relative_eq;

    fn unit(x: f64, y: f64, z: f64) -> UnitVec3 {
        UnitVec3::from_components(x, y, z).unwrap()
    }

    /// Pairs finger points index-to-index with object points.
    fn paired_set(
        finger1: Vec<PointNormal>,
        finger2: Vec<PointNormal>,
        object: Vec<PointNormal>,
    ) -> (CorrespondenceSet, [OrientedSurface; 2], OrientedSurface) {
        let mut pairs = Vec::new();
        let mut oi = 0;
        for (finger, pts) in [(Finger::One, &finger1), (Finger::Two, &finger2)] {
            for fi in 0..pts.len() {
                pairs.push(FixedPair {
                    finger,
                    finger_index: fi,
                    object_index: oi,
                });
                oi += 1;
            }
        }
        let fingers = [OrientedSurface::new(finger1), OrientedSurface::new(finger2)];
        let object = OrientedSurface::new(object);
        let set = FixedPairSpec {
            object: None,
            pairs,
        }
        .resolve(&fingers, &object)
        .unwrap();
        (set, fingers, object)
    }

    fn state_with(fingers: [OrientedSurface; 2], v: UnitVec3, n_z: UnitVec3, d: f64) -> FitState {
        FitState {
            fingers,
            v,
            n_z,
            aperture: d,
        }
    }

    #[test]
    fn rotation_stage_is_a_no_op_on_aligned_geometry() {
        let up = unit(0.0, 0.0, 1.0);
        let (mut corr, fingers, _object) = paired_set(
            vec![PointNormal::new(Vec3::new(0.0, -0.01, 0.0), unit(0.0, 1.0, 0.0))],
            vec![PointNormal::new(Vec3::new(0.0, 0.01, 0.0), unit(0.0, -1.0, 0.0))],
            vec![
                PointNormal::new(Vec3::new(0.0, -0.02, 0.0), unit(0.0, -1.0, 0.0)),
                PointNormal::new(Vec3::new(0.0, 0.02, 0.0), unit(0.0, 1.0, 0.0)),
            ],
        );
        let mut state = state_with(fingers, unit(0.0, 1.0, 0.0), up, 0.02);
        let omega = rotation_stage(&mut state, &mut corr, &up, 0.8, 1e-9).unwrap();
        assert!(omega.norm() < 1e-12, "expected zero step, got {omega:?}");
    }

    #[test]
    fn rotation_stage_rotates_every_tracked_quantity_about_the_origin() {
        // Finger normal +x against object normal +z wants a rotation; check
        // that surfaces, correspondence copies, and axes all receive exactly
        // the rotation the stage reports, applied about the origin.
        let (mut corr, fingers, _object) = paired_set(
            vec![PointNormal::new(Vec3::new(0.3, 0.1, -0.2), unit(1.0, 0.0, 0.0))],
            vec![PointNormal::new(Vec3::new(-0.1, 0.4, 0.2), unit(0.0, 1.0, 0.0))],
            vec![
                PointNormal::new(Vec3::new(0.3, 0.2, -0.2), unit(0.0, 0.0, 1.0)),
                PointNormal::new(Vec3::new(-0.1, 0.5, 0.2), unit(0.0, -1.0, 0.0)),
            ],
        );
        let before = corr.pairs()[0].finger_point.position;
        let fingers_before = fingers.clone();
        let mut state = state_with(fingers, unit(0.0, 1.0, 0.0), unit(0.0, 0.0, 1.0), 0.03);
        let n_app = unit(0.0, 0.0, 1.0);
        let omega = rotation_stage(&mut state, &mut corr, &n_app, 0.0, 1e-9).unwrap();
        assert!(omega.norm() > 1e-3, "fixture should demand a rotation");
        let r = rodrigues(&omega);
        assert_relative_eq!(
            corr.pairs()[0].finger_point.position,
            r.apply(&before),
            epsilon = 1e-12
        );
        for (moved, orig) in state.fingers[0].iter().zip(fingers_before[0].iter()) {
            assert_relative_eq!(moved.position, r.apply(&orig.position), epsilon = 1e-12);
        }
        assert_relative_eq!(
            *state.n_z.as_vec(),
            r.apply(&Vec3::new(0.0, 0.0, 1.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rotation_stage_handles_the_parallel_worst_case_via_damping() {
        // Parallel normals produce an all-zero linearization: the objective
        // is flat, and the damped solve must return the zero step rather than
        // blow up. Verified against a dense grid + golden-section scan of the
        // linearized objective.
        let up = unit(0.0, 0.0, 1.0);
        let (mut corr, fingers, _object) = paired_set(
            vec![PointNormal::new(Vec3::zeros(), up)],
            vec![PointNormal::new(Vec3::zeros(), unit(0.0, 0.0, -1.0))],
            vec![
                PointNormal::new(Vec3::new(0.0, 0.0, 0.01), up),
                PointNormal::new(Vec3::new(0.0, 0.0, -0.01), up),
            ],
        );
        let system = rotation_system(&corr, &up, &up, 0.0);
        let mut state = state_with(fingers, unit(0.0, 1.0, 0.0), up, 0.03);
        let omega = rotation_stage(&mut state, &mut corr, &up, 0.0, 1e-9).unwrap();
        assert!(omega.norm() < 1e-9);

        // Grid scan over candidate axis-angle vectors, refined by
        // golden-section along the best axis found.
        let objective = |w: &Vec3| {
            let x = nalgebra::DVector::from_column_slice(&[w.x, w.y, w.z]);
            let r = system.residual_norm(&x);
            r * r
        };
        let mut best = f64::INFINITY;
        let mut best_w = Vec3::zeros();
        for i in -4..=4 {
            for j in -4..=4 {
                for k in -4..=4 {
                    let w = Vec3::new(i as f64, j as f64, k as f64) * 0.25;
                    let value = objective(&w);
                    if value < best {
                        best = value;
                        best_w = w;
                    }
                }
            }
        }
        // Golden-section refinement along the direction of the best sample
        // (or +z when the grid minimum sits at the origin).
        let dir = if best_w.norm() > 0.0 {
            best_w / best_w.norm()
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        for _ in 0..60 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if objective(&(dir * m1)) <= objective(&(dir * m2)) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(objective(&(dir * (0.5 * (lo + hi)))));
        assert!(objective(&omega) <= best + 1e-9);
    }

    #[test]
    fn rotation_stage_matches_qr_oracle_on_random_normals() {
        let mut rng_state = 0xfeedu64;
        let mut next = move || {
            rng_state = rng_state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..5 {
            let random_unit = |next: &mut dyn FnMut() -> f64| loop {
                let v = Vec3::new(next(), next(), next());
                if v.norm() > 0.1 {
                    break UnitVec3::new(v).unwrap();
                }
            };
            let finger1: Vec<PointNormal> = (0..4)
                .map(|_| PointNormal::new(Vec3::new(next(), next(), next()), random_unit(&mut next)))
                .collect();
            let finger2: Vec<PointNormal> = (0..4)
                .map(|_| PointNormal::new(Vec3::new(next(), next(), next()), random_unit(&mut next)))
                .collect();
            let object: Vec<PointNormal> = (0..8)
                .map(|_| PointNormal::new(Vec3::new(next(), next(), next()), random_unit(&mut next)))
                .collect();
            let (mut corr, fingers, _) = paired_set(finger1, finger2, object);
            let n_z = random_unit(&mut next);
            let n_app = random_unit(&mut next);
            let system = rotation_system(&corr, &n_z, &n_app, 0.8);
            let mut state = state_with(fingers, unit(0.0, 1.0, 0.0), n_z, 0.05);
            let omega = rotation_stage(&mut state, &mut corr, &n_app, 0.8, 1e-9).unwrap();

            // Oracle: thin-QR least squares on the same stacked rows.
            let qr = system.matrix().clone().qr();
            let qtb = qr.q().transpose() * system.rhs();
            let oracle = qr.r().solve_upper_triangular(&qtb).unwrap();
            let oracle = Vec3::new(oracle[0], oracle[1], oracle[2]);
            let rel = (omega - oracle).norm() / oracle.norm().max(1.0);
            assert!(rel < 1e-6, "solver deviates from QR oracle by {rel:e}");
        }
    }

    #[test]
    fn growing_beta_pulls_the_step_toward_the_approach_only_answer() {
        // The first pair row demands ω_z = −1 while the approach row demands
        // ω_z = +1: the blend must approach the approach-only solution as
        // beta grows. The remaining pairs come in mirrored couples whose
        // right-hand sides cancel, pinning ω_x = ω_y = 0 so the stacked
        // system is full rank without biasing the contested z component.
        let make = |beta: f64| -> Vec3 {
            let x = unit(1.0, 0.0, 0.0);
            let y = unit(0.0, 1.0, 0.0);
            let z = unit(0.0, 0.0, 1.0);
            let at = |n: UnitVec3| PointNormal::new(Vec3::zeros(), n);
            let (mut corr, fingers, _) = paired_set(
                vec![at(x), at(y), at(z)],
                vec![at(z), at(x)],
                vec![at(y), at(z), at(y), at(x), at(z)],
            );
            let n_z = unit(1.0, 0.0, 0.0);
            let n_app = unit(0.0, 1.0, 0.0);
            let mut state = state_with(fingers, unit(0.0, 0.0, 1.0), n_z, 0.05);
            rotation_stage(&mut state, &mut corr, &n_app, beta, 1e-12).unwrap()
        };
        let approach_only = Vec3::new(0.0, 0.0, 1.0);
        let distances: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&beta| (make(beta) - approach_only).norm())
            .collect();
        assert!(
            distances[0] > distances[1] && distances[1] > distances[2],
            "distances to approach-only solution must shrink: {distances:?}"
        );
    }

    #[test]
    fn translation_stage_zeroes_the_centroid_gap() {
        let up = unit(0.0, 0.0, 1.0);
        let (mut corr, fingers, object) = paired_set(
            vec![PointNormal::new(Vec3::new(0.4, 0.1, 0.0), unit(0.0, 1.0, 0.0))],
            vec![PointNormal::new(Vec3::new(0.2, -0.3, 0.5), unit(0.0, -1.0, 0.0))],
            vec![
                PointNormal::new(Vec3::new(1.0, 2.0, 3.0), unit(0.0, -1.0, 0.0)),
                PointNormal::new(Vec3::new(1.5, 2.5, 3.5), unit(0.0, 1.0, 0.0)),
            ],
        );
        let mut state = state_with(fingers, unit(0.0, 1.0, 0.0), up, 0.04);
        let t = translation_stage(&mut state, &mut corr, &object.centroid().unwrap()).unwrap();
        assert!(t.norm() > 1.0, "fixture starts far from the object");
        let gap = (object.centroid().unwrap()
            - joint_centroid(&state.fingers[0], &state.fingers[1]).unwrap())
        .norm();
        assert!(gap < 1e-12, "centroid gap {gap:e} after translation stage");
        // Correspondence copies moved by the same step.
        assert_relative_eq!(
            corr.pairs()[0].finger_point.position,
            Vec3::new(0.4, 0.1, 0.0) + t,
            epsilon = 1e-12
        );
    }

    /// Symmetric two-pair fixture with plane gaps `gap` on each side;
    /// closing by `2·gap` zeroes the surface distance.
    fn symmetric_gap_fixture(gap: f64, d: f64) -> (CorrespondenceSet, FitState) {
        let (corr, fingers, _) = paired_set(
            vec![PointNormal::new(
                Vec3::new(0.0, -d / 2.0, 0.0),
                unit(0.0, 1.0, 0.0),
            )],
            vec![PointNormal::new(
                Vec3::new(0.0, d / 2.0, 0.0),
                unit(0.0, -1.0, 0.0),
            )],
            vec![
                PointNormal::new(Vec3::new(0.0, -d / 2.0 + gap, 0.0), unit(0.0, -1.0, 0.0)),
                PointNormal::new(Vec3::new(0.0, d / 2.0 - gap, 0.0), unit(0.0, 1.0, 0.0)),
            ],
        );
        let state = state_with(fingers, unit(0.0, 1.0, 0.0), unit(0.0, 0.0, 1.0), d);
        (corr, state)
    }

    #[test]
    fn aperture_estimate_closes_symmetric_gaps_exactly() {
        let (corr, state) = symmetric_gap_fixture(0.0305, 0.091);
        let dd_hat = aperture_estimate(&corr, &state.v).unwrap();
        assert_relative_eq!(dd_hat, -0.061, epsilon = 1e-12);
    }

    #[test]
    fn aperture_estimate_minimizes_the_surface_distance() {
        // Scan oracle on an asymmetric fixture: the estimate must beat every
        // scanned candidate.
        let (mut corr, state) = symmetric_gap_fixture(0.02, 0.08);
        // Skew one object point to make the optimum non-obvious.
        let (corr2, _, _) = paired_set(
            vec![corr.pairs()[0].finger_point],
            vec![corr.pairs()[1].finger_point],
            vec![
                PointNormal::new(Vec3::new(0.0, -0.015, 0.0), unit(0.1, -1.0, 0.0)),
                corr.pairs()[1].object_point,
            ],
        );
        corr = corr2;
        let dd_hat = aperture_estimate(&corr, &state.v).unwrap();
        let zero = Vec3::zeros();
        let at_hat = surface_distance(&corr, &zero, &zero, dd_hat, &state.v);
        let mut scan_best = f64::INFINITY;
        for i in 0..=8000 {
            let dd = -0.1 + i as f64 * 2.5e-5;
            scan_best = scan_best.min(surface_distance(&corr, &zero, &zero, dd, &state.v));
        }
        assert!(at_hat <= scan_best + 1e-12);
    }

    #[test]
    fn aperture_stage_applies_clamped_step_and_updates_aperture() {
        // Target aperture 0.08 − 2·0.04 = 0.0 lies below d_min = 0.011: the
        // stage must stop exactly at the limit.
        let (mut corr, mut state) = symmetric_gap_fixture(0.04, 0.08);
        let dd = aperture_stage(&mut state, &mut corr, 0.011, 0.091).unwrap();
        assert_relative_eq!(dd, 0.011 - 0.08, epsilon = 1e-12);
        assert_relative_eq!(state.aperture, 0.011, epsilon = 1e-12);
        let gap = (state.fingers[0].points()[0].position - state.fingers[1].points()[0].position)
            .norm();
        assert_relative_eq!(gap, 0.011, epsilon = 1e-12);
    }

    #[test]
    fn aperture_clamping_covers_all_three_branches() {
        // Below d_min, inside the range, above d_max.
        assert_relative_eq!(clamp_aperture_step(-0.1, 0.05, 0.011, 0.091), -0.039);
        assert_relative_eq!(clamp_aperture_step(0.01, 0.05, 0.011, 0.091), 0.01);
        assert_relative_eq!(clamp_aperture_step(0.2, 0.05, 0.011, 0.091), 0.041);
    }

    #[test]
    fn aperture_stage_reports_degeneracy_when_normals_avoid_the_axis() {
        // Object normals along x, closing axis along y: no aperture change
        // can alter any residual.
        let (mut corr, fingers, _) = paired_set(
            vec![PointNormal::new(Vec3::zeros(), unit(-1.0, 0.0, 0.0))],
            vec![PointNormal::new(Vec3::new(0.0, 0.05, 0.0), unit(-1.0, 0.0, 0.0))],
            vec![
                PointNormal::new(Vec3::new(0.01, 0.0, 0.0), unit(1.0, 0.0, 0.0)),
                PointNormal::new(Vec3::new(0.01, 0.05, 0.0), unit(1.0, 0.0, 0.0)),
            ],
        );
        let mut state = state_with(fingers, unit(0.0, 1.0, 0.0), unit(0.0, 0.0, 1.0), 0.05);
        let before = state.clone();
        let err = aperture_stage(&mut state, &mut corr, 0.011, 0.091).unwrap_err();
        assert!(matches!(err, Error::DegenerateAperture));
        // State untouched on error.
        assert_eq!(state.aperture, before.aperture);
        assert_eq!(state.fingers[0], before.fingers[0]);
    }

    #[test]
    fn stages_only_reduce_the_monitored_error_on_a_posed_fixture() {
        // Slab-like fixture run through one full stage sweep: the geometric
        // error must not increase.
        let (mut corr, mut state) = symmetric_gap_fixture(0.0305, 0.091);
        let object = OrientedSurface::new(vec![
            corr.pairs()[0].object_point,
            corr.pairs()[1].object_point,
        ]);
        let zero = Vec3::zeros();
        let before = geometric_error(&corr, &zero, &zero, 0.0, &state.v, 0.1);
        let n_app = unit(0.0, 0.0, 1.0);
        rotation_stage(&mut state, &mut corr, &n_app, 0.8, 1e-9).unwrap();
        translation_stage(&mut state, &mut corr, &object.centroid().unwrap()).unwrap();
        aperture_stage(&mut state, &mut corr, 0.011, 0.091).unwrap();
        let after = geometric_error(&corr, &zero, &zero, 0.0, &state.v, 0.1);
        assert!(after <= before + 1e-15, "error rose from {before:e} to {after:e}");
        assert!(after < 1e-20, "symmetric fixture should fit exactly, got {after:e}");
    }
}
