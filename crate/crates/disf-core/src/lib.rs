//! Grasp planning for two-finger parallel grippers over oriented point
//! clouds.
//!
//! The central idea is *disentangled* surface fitting: instead of solving
//! for a full gripper pose in one coupled system, each iteration solves
//! rotation, translation, and finger aperture separately — a tiny damped
//! linear solve for orientation, a closed-form centroid move, and a scalar
//! least squares for the opening — then re-matches fingertip points to the
//! object and repeats until the geometric error stops improving. Two
//! baselines (a joint 6-DoF linearized fitter and an evolutionary search)
//! share the same matching, quality measures, and result format so the
//! approaches can be compared head to head.
//!
//! Entry points:
//! - [`solver::disf_plan`] — the staged planner.
//! - [`baseline::visf_plan`] — joint linearized baseline.
//! - [`baseline::cmaes_plan`] — derivative-free baseline.
//! - [`scene`] — declarative scene descriptions and a built-in test suite.
//! - [`quality`] — grasp quality measures shared by everything above.

pub mod baseline;
pub mod correspondence;
pub mod error;
pub mod geom;
pub mod gripper;
pub mod kdtree;
pub mod lstsq;
pub mod ply;
pub mod quality;
pub mod scene;
pub mod solver;
pub mod surface;
pub mod synth;

pub use correspondence::{match_nearest, CorrespondencePair, CorrespondenceSet, FixedPair, FixedPairSpec};
pub use error::{Error, Result};
pub use geom::{rodrigues, skew, small_rotation, Mat3, Rotation, UnitVec3, Vec3};
pub use gripper::{transform_point_normal, transform_surface, Finger, GripperModel, GripperState, PadConfig};
pub use kdtree::SpatialIndex;
pub use quality::{QualityReport, QualityWeights};
pub use solver::{
    disf_plan, evaluate_grasp, GraspPlan, InitialPose, Matching, PlannerConfig, PlannerKind,
    PoseAccumulator,
};
pub use surface::{joint_centroid, OrientedSurface, PointNormal};

use baseline::CmaEsConfig;

/// Runs the planner selected by `kind` with a shared configuration.
///
/// `cmaes` is only consulted for [`PlannerKind::CmaEs`].
#[allow(clippy::too_many_arguments)]
pub fn run_planner(
    kind: PlannerKind,
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    initial: &InitialPose,
    matching: Matching<'_>,
    config: &PlannerConfig,
    cmaes: &CmaEsConfig,
) -> Result<GraspPlan> {
    match kind {
        PlannerKind::Disf => disf_plan(object, gripper, n_app, initial, matching, config),
        PlannerKind::Visf => baseline::visf_plan(object, gripper, n_app, initial, matching, config),
        PlannerKind::CmaEs => {
            baseline::cmaes_plan(object, gripper, n_app, initial, matching, config, cmaes)
        }
    }
}
