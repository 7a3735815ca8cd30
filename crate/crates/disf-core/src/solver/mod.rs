//! Iterative grasp planner: configuration, pose bookkeeping, the shared
//! match–fit–evaluate loop, and the staged planner built on top of it.
//!
//! The planners in this crate all improve a gripper pose step by step but
//! report a single closed-form result: a rotation, a translation, and an
//! aperture change that, applied once to the canonical gripper, land it on
//! the fitted grasp. [`PoseAccumulator`] guarantees that property by folding
//! every per-iteration step into an absolute pose with exact rigid
//! composition, and the loop's final quality entry is recomputed from that
//! replayed pose rather than from the incrementally moved surfaces — so a
//! stored plan always reproduces the quality it reports.

pub mod stages;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::correspondence::{match_nearest, CorrespondenceSet, FixedPairSpec};
use crate::error::{Error, Result};
use crate::geom::{rodrigues, serde_vec3, Rotation, UnitVec3, Vec3};
use crate::gripper::GripperModel;
use crate::kdtree::SpatialIndex;
use crate::quality::{geometric_error, report_current, QualityReport, QualityWeights};
use crate::surface::OrientedSurface;

use stages::{aperture_stage, rotation_stage, translation_stage, FitState};

/// Which planning algorithm produced a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    /// Staged planner: rotation, translation, and aperture solved separately.
    Disf,
    /// Joint 6-DoF baseline: pose solved in one linearized system.
    Visf,
    /// Derivative-free evolutionary baseline.
    CmaEs,
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlannerKind::Disf => "disf",
            PlannerKind::Visf => "visf",
            PlannerKind::CmaEs => "cma-es",
        })
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disf" => Ok(PlannerKind::Disf),
            "visf" => Ok(PlannerKind::Visf),
            "cma-es" | "cmaes" => Ok(PlannerKind::CmaEs),
            other => Err(Error::InvalidConfig(format!(
                "unknown planner {other:?}; expected disf, visf, or cma-es"
            ))),
        }
    }
}

/// Tunable parameters shared by the iterative planners.
///
/// Angles are configured in degrees because that is what config files and
/// command lines read naturally; [`PlannerConfig::max_normal_angle`] converts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Weight of normal misalignment inside the monitored geometric error.
    pub alpha: f64,
    /// Weight of the approach-alignment residual in the rotation solve.
    pub beta: f64,
    /// Initial gripper aperture (m).
    pub d0: f64,
    /// Termination threshold on the per-iteration change of the geometric
    /// error.
    pub delta_e: f64,
    /// Hard iteration cap.
    pub max_iterations: usize,
    /// Tikhonov damping for the linearized solves.
    pub lambda: f64,
    /// Nearest-neighbour matching rejects pairs whose normals are more than
    /// this many degrees from antiparallel.
    pub max_normal_angle_deg: f64,
    /// Pull-back distance along the approach direction when the initial
    /// translation is derived from the object centroid.
    pub standoff: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.8,
            d0: 0.091,
            delta_e: 1e-4,
            max_iterations: 50,
            lambda: 1e-9,
            max_normal_angle_deg: 60.0,
            standoff: 0.0,
        }
    }
}

impl PlannerConfig {
    pub fn weights(&self) -> QualityWeights {
        QualityWeights {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    /// Matching angle limit in radians.
    pub fn max_normal_angle(&self) -> f64 {
        self.max_normal_angle_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        self.weights().validate()?;
        let checks: [(&str, f64, bool); 5] = [
            ("d0", self.d0, self.d0.is_finite() && self.d0 > 0.0),
            (
                "delta_e",
                self.delta_e,
                self.delta_e.is_finite() && self.delta_e > 0.0,
            ),
            (
                "lambda",
                self.lambda,
                self.lambda.is_finite() && self.lambda >= 0.0,
            ),
            // Zero is legal: it shrinks the matching cone to exactly
            // anti-parallel normals, which typically ends in a
            // no-correspondence planner error rather than a config error.
            (
                "max_normal_angle_deg",
                self.max_normal_angle_deg,
                (0.0..=180.0).contains(&self.max_normal_angle_deg),
            ),
            ("standoff", self.standoff, self.standoff.is_finite()),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(Error::InvalidConfig(format!("{name} = {value} is invalid")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Where the gripper starts before the first iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialPose {
    pub rotation: Rotation,
    #[serde(with = "serde_vec3")]
    pub translation: Vec3,
}

impl Default for InitialPose {
    fn default() -> Self {
        Self {
            rotation: Rotation::identity(),
            translation: Vec3::zeros(),
        }
    }
}

impl InitialPose {
    /// Centroid-based default: identity orientation, translation at the
    /// object centroid pulled back by `standoff` along the approach
    /// direction.
    pub fn default_for(
        object: &OrientedSurface,
        n_app: &UnitVec3,
        standoff: f64,
    ) -> Result<Self> {
        Ok(Self {
            rotation: Rotation::identity(),
            translation: object.centroid()? - n_app.as_vec() * standoff,
        })
    }
}

/// How finger points are paired with object points each iteration.
#[derive(Clone, Copy, Debug)]
pub enum Matching<'a> {
    /// Re-match every iteration: nearest object point whose normal is within
    /// the configured angle of antiparallel.
    Nearest,
    /// A fixed, user-supplied pairing used unchanged every iteration.
    Fixed(&'a FixedPairSpec),
}

/// Absolute pose built up from per-iteration steps.
///
/// Each iteration contributes a rotation `R` (about the coordinate origin),
/// then a translation `t`, then an aperture change `dd`. Folding the step in
/// as `rotation ← R·rotation`, `translation ← R·translation + t` keeps the
/// stored pose exactly equal to the net transform the moving surfaces have
/// experienced — including the re-rotation of earlier translations — so one
/// replay of `(rotation, translation, d0 + aperture_delta)` reproduces the
/// incremental geometry to floating-point accuracy.
#[derive(Clone, Copy, Debug)]
pub struct PoseAccumulator {
    pub rotation: Rotation,
    pub translation: Vec3,
    pub aperture_delta: f64,
}

impl PoseAccumulator {
    pub fn from_initial(initial: &InitialPose) -> Self {
        Self {
            rotation: initial.rotation,
            translation: initial.translation,
            aperture_delta: 0.0,
        }
    }

    /// Folds one iteration's axis-angle step, translation step, and aperture
    /// step into the absolute pose.
    pub fn apply_step(&mut self, omega: &Vec3, t: &Vec3, dd: f64) {
        let r = rodrigues(omega);
        self.rotation = r * self.rotation;
        self.translation = r.apply(&self.translation) + t;
        self.aperture_delta += dd;
    }
}

/// Result of a planning run: the closed-form grasp pose plus the quality
/// trajectory that produced it.
///
/// `trace[0]` is the quality at the initial pose (under the first
/// iteration's matching); `trace[k]` the quality after iteration `k`. The
/// final entry is recomputed from the replayed pose, so re-evaluating a
/// stored plan reproduces it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraspPlan {
    pub planner: PlannerKind,
    pub rotation: Rotation,
    #[serde(with = "serde_vec3")]
    pub translation: Vec3,
    /// Net aperture change relative to the initial opening `d0`.
    #[serde(rename = "dd")]
    pub aperture_delta: f64,
    /// Absolute aperture of the planned grasp.
    #[serde(rename = "d_final")]
    pub final_aperture: f64,
    pub iterations: usize,
    pub pairs_per_finger: [usize; 2],
    pub pairs_total: usize,
    pub trace: Vec<QualityReport>,
    pub planning_time_ms: f64,
}

impl GraspPlan {
    /// Quality of the planned grasp (the replayed final trace entry).
    pub fn final_quality(&self) -> &QualityReport {
        self.trace.last().expect("a plan always has a trace entry")
    }
}

/// Builds the iteration's correspondence set for the given finger surfaces.
pub(crate) fn build_pairs(
    fingers: &[OrientedSurface; 2],
    object: &OrientedSurface,
    index: Option<&SpatialIndex>,
    matching: Matching<'_>,
    max_normal_angle: f64,
) -> Result<CorrespondenceSet> {
    match matching {
        Matching::Nearest => {
            let index = index.expect("nearest matching requires a spatial index");
            match_nearest(fingers, object, index, max_normal_angle)
        }
        Matching::Fixed(spec) => spec.resolve(fingers, object),
    }
}

/// Evaluates the grasp defined by an absolute pose: poses the canonical
/// gripper, builds correspondences, and scores every quality measure.
#[allow(clippy::too_many_arguments)]
pub(crate) fn evaluate_pose(
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    matching: Matching<'_>,
    config: &PlannerConfig,
    index: Option<&SpatialIndex>,
    rotation: &Rotation,
    translation: &Vec3,
    aperture: f64,
    iteration: usize,
) -> Result<(QualityReport, CorrespondenceSet)> {
    let fingers = gripper.posed_fingers(rotation, translation, aperture);
    let v = gripper.v0().rotated(rotation);
    let n_z = gripper.n_z0().rotated(rotation);
    let corr = build_pairs(&fingers, object, index, matching, config.max_normal_angle())?;
    let object_centroid = object.centroid()?;
    let report = report_current(
        &corr,
        &v,
        &n_z,
        n_app,
        &config.weights(),
        &object_centroid,
        &fingers,
        iteration,
    )?;
    Ok((report, corr))
}

/// Scores an absolute grasp pose: poses the canonical gripper at
/// `(rotation, translation, aperture)`, matches pad points to the object,
/// and computes every quality measure. This is the same evaluation used for
/// the final entry of a plan's trace, so replaying a stored plan through
/// this function reproduces its reported final quality.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_grasp(
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    matching: Matching<'_>,
    config: &PlannerConfig,
    rotation: &Rotation,
    translation: &Vec3,
    aperture: f64,
) -> Result<QualityReport> {
    let index = match matching {
        Matching::Nearest => Some(SpatialIndex::build(object.points())),
        Matching::Fixed(_) => None,
    };
    let (report, _) = evaluate_pose(
        object,
        gripper,
        n_app,
        matching,
        config,
        index.as_ref(),
        rotation,
        translation,
        aperture,
        0,
    )?;
    Ok(report)
}

/// One iteration's solved steps, in the order they were applied.
pub(crate) struct IterationStep {
    pub omega: Vec3,
    pub translation: Vec3,
    pub aperture: f64,
}

/// Shared planner loop: re-match (or reuse fixed pairs), run the supplied
/// fitting step, track quality, stop when the monitored error stalls or the
/// iteration cap is reached, then replay the accumulated pose for the final
/// report.
pub(crate) fn run_iterative<F>(
    planner: PlannerKind,
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    initial: &InitialPose,
    matching: Matching<'_>,
    config: &PlannerConfig,
    mut step: F,
) -> Result<GraspPlan>
where
    F: FnMut(&mut FitState, &mut CorrespondenceSet, usize) -> Result<IterationStep>,
{
    let started = Instant::now();
    config.validate()?;
    let weights = config.weights();
    let mut state = FitState::initial(gripper, &initial.rotation, &initial.translation, config.d0)?;
    let mut acc = PoseAccumulator::from_initial(initial);
    let index = match matching {
        Matching::Nearest => Some(SpatialIndex::build(object.points())),
        Matching::Fixed(_) => None,
    };
    let object_centroid = object.centroid()?;
    let mut trace: Vec<QualityReport> = Vec::new();
    let mut iterations = 0usize;

    loop {
        let iteration = iterations + 1;
        let mut corr = build_pairs(
            &state.fingers,
            object,
            index.as_ref(),
            matching,
            config.max_normal_angle(),
        )
        .map_err(|e| e.at_iteration(iteration))?;
        let zero = Vec3::zeros();
        let e_prev = geometric_error(&corr, &zero, &zero, 0.0, &state.v, config.alpha);
        if trace.is_empty() {
            trace.push(
                report_current(
                    &corr,
                    &state.v,
                    &state.n_z,
                    n_app,
                    &weights,
                    &object_centroid,
                    &state.fingers,
                    0,
                )
                .map_err(|e| e.at_iteration(iteration))?,
            );
        }
        let solved = step(&mut state, &mut corr, iteration).map_err(|e| e.at_iteration(iteration))?;
        acc.apply_step(&solved.omega, &solved.translation, solved.aperture);
        iterations = iteration;
        let report = report_current(
            &corr,
            &state.v,
            &state.n_z,
            n_app,
            &weights,
            &object_centroid,
            &state.fingers,
            iteration,
        )
        .map_err(|e| e.at_iteration(iteration))?;
        let e = report.e_geom;
        trace.push(report);
        log::debug!(
            "{planner} iteration {iteration}: e_geom {e_prev:.6e} -> {e:.6e} ({} pairs)",
            corr.len()
        );
        if (e_prev - e).abs() <= config.delta_e || iterations >= config.max_iterations {
            break;
        }
    }

    let final_aperture = gripper.clamp_aperture(config.d0 + acc.aperture_delta);
    let (final_report, final_corr) = evaluate_pose(
        object,
        gripper,
        n_app,
        matching,
        config,
        index.as_ref(),
        &acc.rotation,
        &acc.translation,
        final_aperture,
        iterations,
    )
    .map_err(|e| e.at_iteration(iterations))?;
    *trace.last_mut().expect("loop ran at least once") = final_report;

    Ok(GraspPlan {
        planner,
        rotation: acc.rotation,
        translation: acc.translation,
        aperture_delta: final_aperture - config.d0,
        final_aperture,
        iterations,
        pairs_per_finger: final_corr.per_finger_counts(),
        pairs_total: final_corr.len(),
        trace,
        planning_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Plans a grasp with the staged fitter.
///
/// Each iteration builds correspondences at the current pose, then solves and
/// applies the rotation, translation, and aperture stages in that order. A
/// degenerate aperture direction (no object normal has any component along
/// the closing axis) is not fatal: the opening is simply left unchanged for
/// that iteration.
pub fn disf_plan(
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    initial: &InitialPose,
    matching: Matching<'_>,
    config: &PlannerConfig,
) -> Result<GraspPlan> {
    let object_centroid = object.centroid()?;
    run_iterative(
        PlannerKind::Disf,
        object,
        gripper,
        n_app,
        initial,
        matching,
        config,
        |state, corr, iteration| {
            let omega = rotation_stage(state, corr, n_app, config.beta, config.lambda)?;
            let translation = translation_stage(state, corr, &object_centroid)?;
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
