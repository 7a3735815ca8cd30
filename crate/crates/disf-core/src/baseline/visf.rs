//! Joint 6-DoF baseline planner.
//!
//! Instead of the staged rotation / translation / aperture decomposition,
//! this fitter solves one damped least-squares system per iteration for the
//! combined update `x = (ω, t) ∈ ℝ⁶`, built from the linearized
//! point-to-plane and normal-opposition residuals. The aperture stage and
//! the outer match–fit–evaluate loop are shared with the staged planner.
//!
//! Because rotation and translation compete for the same residuals — and
//! nothing pulls the fingers toward the object centroid — this baseline
//! tends to fit the contact geometry well while leaving the hand off-centre
//! on asymmetric objects. That contrast is exactly what it exists to
//! demonstrate.

use nalgebra::SVector;

use crate::correspondence::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geom::{rodrigues, UnitVec3, Vec3};
use crate::gripper::GripperModel;
use crate::lstsq::{LeastSquaresSystem, NormalAccumulator};
use crate::solver::stages::aperture_stage;
use crate::solver::{
    run_iterative, GraspPlan, InitialPose, IterationStep, Matching, PlannerConfig, PlannerKind,
};
use crate::surface::OrientedSurface;

/// Emits the rows of the joint linearized system over `x = (ω, t)` into
/// `sink`.
///
/// Per pair, two rows:
/// - geometry: `[(p × n_q)ᵀ, n_qᵀ] · x = −(p − q)·n_q` — the point-to-plane
///   residual linearized about the current pose;
/// - normals, scaled by `alpha`: `alpha (n_p × n_q)ᵀ · ω = −alpha (n_p·n_q + 1)`.
///   The translation block of a normal row is identically zero, so these rows
///   go through their own callback carrying just the rotation coefficients.
fn joint_rows<S>(
    corr: &CorrespondenceSet,
    alpha: f64,
    sink: &mut S,
    geometry: impl Fn(&mut S, SVector<f64, 6>, f64),
    normals: impl Fn(&mut S, SVector<f64, 3>, f64),
) {
    for pair in corr.iter() {
        let p = pair.finger_point.position;
        let q = pair.object_point.position;
        let n_p = pair.finger_point.normal.as_vec();
        let n_q = pair.object_point.normal.as_vec();
        let pxn = p.cross(n_q);
        geometry(
            sink,
            SVector::<f64, 6>::from_column_slice(&[pxn.x, pxn.y, pxn.z, n_q.x, n_q.y, n_q.z]),
            -(p - q).dot(n_q),
        );
        let a = n_p.cross(n_q) * alpha;
        normals(
            sink,
            SVector::<f64, 3>::new(a.x, a.y, a.z),
            -alpha * (n_p.dot(n_q) + 1.0),
        );
    }
}

/// The stacked form of [`joint_rows`] with normal rows zero-padded to width
/// six, for oracles and diagnostics. The planner itself folds the same rows
/// into a [`NormalAccumulator`].
pub fn joint_pose_system(corr: &CorrespondenceSet, alpha: f64) -> LeastSquaresSystem {
    let mut system = LeastSquaresSystem::new(6);
    joint_rows(
        corr,
        alpha,
        &mut system,
        |sys, row, rhs| sys.push_row(row.as_slice(), rhs),
        |sys, lead, rhs| sys.push_row(&[lead[0], lead[1], lead[2], 0.0, 0.0, 0.0], rhs),
    );
    system
}

/// Plans a grasp with the joint 6-DoF baseline.
///
/// Shares configuration, matching, termination, and the plan format with
/// [`crate::solver::disf_plan`]; `config.beta` is unused because this
/// baseline has no approach-alignment term.
pub fn visf_plan(
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    initial: &InitialPose,
    matching: Matching<'_>,
    config: &PlannerConfig,
) -> Result<GraspPlan> {
    run_iterative(
        PlannerKind::Visf,
        object,
        gripper,
        n_app,
        initial,
        matching,
        config,
        |state, corr, iteration| {
            let mut normal = NormalAccumulator::<6>::new();
            joint_rows(
                corr,
                config.alpha,
                &mut normal,
                |acc, row, rhs| acc.add_row(row, rhs),
                |acc, lead, rhs| acc.add_leading_row::<3>(lead, rhs),
            );
            let x = normal.solve(config.lambda, "joint pose stage")?;
            let omega = Vec3::new(x[0], x[1], x[2]);
            let translation = Vec3::new(x[3], x[4], x[5]);
            let r = rodrigues(&omega);
            for finger in &mut state.fingers {
                finger.rigid_transform(&r, &translation);
            }
            corr.transform_fingers(&r, &translation, 0.0, &state.v);
            state.v = state.v.rotated(&r);
            state.n_z = state.n_z.rotated(&r);
            let aperture = match aperture_stage(state, corr, gripper.d_min(), gripper.d_max()) {
                Ok(dd) => dd,
                Err(Error::DegenerateAperture) => {
                    log::warn!(
                        "iteration {iteration}: aperture direction degenerate, keeping the current opening"
                    );
                    0.0
                }
                Err(other) => return Err(other),
            };
            Ok(IterationStep {
                omega,
                translation,
                aperture,
            })
        },
    )
}
