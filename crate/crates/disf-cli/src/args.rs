//! Command-line definitions for the `disf` binary.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use disf_core::PlannerKind;

/// Grasp planning for two-finger parallel grippers over oriented point
/// clouds: a staged iterative planner plus joint-linearized and
/// evolutionary baselines, with shared quality reporting.
///
/// Set `DISF_LOG` (error, warn, info, debug, trace) to control verbosity.
/// Exit codes: 0 success, 2 bad input (scenes, configs, files),
/// 3 planner failure (no correspondences, rank deficiency).
#[derive(Debug, Parser)]
#[command(name = "disf", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a grasp on a scene and write the plan as JSON.
    Plan(PlanArgs),
    /// Re-evaluate a stored plan against a scene and print a quality report.
    ///
    /// The pose stored in the plan is replayed from scratch: the gripper is
    /// re-posed, pad points re-matched, and every quality measure recomputed,
    /// then checked against the plan's own final trace entry.
    Eval(EvalArgs),
    /// Run planners across scenes and report quality and timing.
    Bench(BenchArgs),
    /// Generate a synthetic oriented point cloud as an ASCII PLY file.
    Gen(GenArgs),
}

/// Overrides for the shared planner configuration and gripper geometry.
/// Unset flags keep the defaults.
#[derive(Debug, Args)]
pub struct PlannerFlags {
    /// Weight of the normal-alignment term in the geometric error.
    #[arg(long, value_name = "W")]
    pub alpha: Option<f64>,

    /// Weight of the approach-alignment row in the rotation solve.
    #[arg(long, value_name = "W")]
    pub beta: Option<f64>,

    /// Initial finger aperture in meters.
    #[arg(long, value_name = "M")]
    pub d0: Option<f64>,

    /// Minimum gripper aperture in meters.
    #[arg(long, value_name = "M")]
    pub dmin: Option<f64>,

    /// Maximum gripper aperture in meters.
    #[arg(long, value_name = "M")]
    pub dmax: Option<f64>,

    /// Stop when the geometric error changes by less than this between
    /// iterations.
    #[arg(long, value_name = "E")]
    pub delta_e: Option<f64>,

    /// Iteration cap for the iterative planners.
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,

    /// Matching cone half-angle between pad and surface normals, in degrees.
    #[arg(long, value_name = "DEG")]
    pub max_normal_angle: Option<f64>,

    /// Initial standoff along the approach direction in meters.
    #[arg(long, value_name = "M")]
    pub standoff: Option<f64>,

    /// Tikhonov damping added to the linear solves.
    #[arg(long, value_name = "L")]
    pub lambda: Option<f64>,

    /// Gripper description TOML (pad grid, axes, aperture range); defaults
    /// to the built-in parallel gripper.
    #[arg(long, value_name = "FILE")]
    pub gripper: Option<PathBuf>,
}

/// Overrides for the evolutionary baseline.
#[derive(Debug, Args)]
pub struct CmaFlags {
    /// Population size per generation.
    #[arg(long, value_name = "N")]
    pub population: Option<usize>,

    /// Number of generations.
    #[arg(long, value_name = "N")]
    pub generations: Option<usize>,

    /// Initial sampling scale.
    #[arg(long, value_name = "S")]
    pub sigma0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Scene: a built-in name (slab, box, cylinder, sphere, plate,
    /// offset-composite) or a path to a scene TOML.
    #[arg(long, default_value = "slab", value_name = "SCENE")]
    pub scene: String,

    /// Planner to run: disf, visf, or cma-es.
    #[arg(long, default_value = "disf", value_parser = PlannerKind::from_str, value_name = "KIND")]
    pub planner: PlannerKind,

    /// Random seed for the evolutionary baseline.
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,

    #[command(flatten)]
    pub flags: PlannerFlags,

    #[command(flatten)]
    pub cma: CmaFlags,

    /// Write the plan JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Plan JSON produced by `disf plan`.
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,

    /// Scene to evaluate against; defaults to the scene recorded in the
    /// plan file.
    #[arg(long, value_name = "SCENE")]
    pub scene: Option<String>,

    /// Allowed absolute difference between the replayed quality values and
    /// the plan's stored final trace entry.
    #[arg(long, default_value_t = 1e-10, value_name = "TOL")]
    pub tolerance: f64,

    /// Write the quality report JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scene to include (repeatable); defaults to the full built-in suite.
    #[arg(long = "scene", value_name = "SCENE")]
    pub scenes: Vec<String>,

    /// Planner to include (repeatable); defaults to disf, visf, cma-es.
    #[arg(long = "planner", value_parser = PlannerKind::from_str, value_name = "KIND")]
    pub planners: Vec<PlannerKind>,

    /// Repetitions per (scene, planner) run; the minimum wall time is
    /// reported. Quality values are identical across repetitions.
    #[arg(long, default_value_t = 3, value_name = "N")]
    pub reps: usize,

    /// Base random seed; the run for scene index i uses seed + i.
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,

    /// Worker threads for the sweep. Row order and content are independent
    /// of the thread count.
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub threads: usize,

    /// Report format. JSON carries rows, aggregates, and wall-clock times;
    /// CSV holds the columns scene, planner, e_geom, e_com, iterations,
    /// pairs (no times, so reruns are byte-identical).
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,

    #[command(flatten)]
    pub flags: PlannerFlags,

    #[command(flatten)]
    pub cma: CmaFlags,

    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator description TOML (kind = "slab" | "box" | "cylinder" |
    /// "sphere" | "plate" | "offset-composite" plus dimensions).
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,

    /// Use the generator of this built-in scene instead of a spec file.
    #[arg(long, default_value = "slab", conflicts_with = "spec", value_name = "NAME")]
    pub builtin: String,

    /// Write the PLY here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Output format for benchmark reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}
