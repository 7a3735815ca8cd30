//! Benchmark sweeps: every (scene, planner) pair, timed and scored.
//!
//! Rows appear in scene-major, planner-minor input order regardless of how
//! many worker threads run the sweep, and every quality value is
//! deterministic given the base seed, so the CSV projection (which carries
//! no wall-clock times) is byte-identical across runs and thread counts.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use disf_core::baseline::CmaEsConfig;
use disf_core::scene::SceneSpec;
use disf_core::{
    run_planner, GripperModel, InitialPose, OrientedSurface, PlannerConfig, PlannerKind, Result,
};
use serde::{Deserialize, Serialize};

/// One (scene, planner) result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub scene: String,
    pub planner: PlannerKind,
    pub e_geom: f64,
    pub e_com: f64,
    pub iterations: usize,
    pub pairs: usize,
    /// Minimum wall-clock planning time over the repetitions, in
    /// milliseconds. Always ≥ 0; excluded from the CSV projection.
    pub time_ms: f64,
}

/// Per-planner means across all scenes in the sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlannerAggregate {
    pub planner: PlannerKind,
    pub mean_e_geom: f64,
    pub mean_e_com: f64,
    pub mean_time_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    /// One row per (scene, planner) pair, scene-major in input order.
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<PlannerAggregate>,
}

impl BenchReport {
    /// Finds the aggregate for a planner, if it was part of the sweep.
    pub fn aggregate(&self, planner: PlannerKind) -> Option<&PlannerAggregate> {
        self.aggregates.iter().find(|a| a.planner == planner)
    }

    /// Deterministic CSV projection. Columns: scene, planner, e_geom,
    /// e_com, iterations, pairs. Times are deliberately left out so that
    /// reruns with the same seed produce byte-identical output.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scene,planner,e_geom,e_com,iterations,pairs\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{:.6e},{:.6e},{},{}",
                row.scene, row.planner, row.e_geom, row.e_com, row.iterations, row.pairs
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Everything a sweep needs, resolved up front so worker threads share it
/// immutably.
pub struct BenchSetup {
    /// Scenes with the label they were requested under (built-in name or
    /// path) and the directory relative object files resolve against.
    pub scenes: Vec<(String, SceneSpec, PathBuf)>,
    pub planners: Vec<PlannerKind>,
    pub gripper: GripperModel,
    pub config: PlannerConfig,
    /// Template for the evolutionary baseline; the run for scene index `i`
    /// replaces the seed with `base_seed + i`.
    pub cmaes: CmaEsConfig,
    pub base_seed: u64,
    /// Timing repetitions per run (min wall time wins); at least 1.
    pub reps: usize,
    /// Worker threads; at least 1.
    pub threads: usize,
}

struct PreparedScene<'a> {
    label: &'a str,
    spec: &'a SceneSpec,
    object: OrientedSurface,
    initial: InitialPose,
}

pub fn run_bench(setup: &BenchSetup) -> Result<BenchReport> {
    let prepared: Vec<PreparedScene<'_>> = setup
        .scenes
        .iter()
        .map(|(label, spec, base)| {
            let object = spec.build_object(base)?;
            let initial = spec.initial_pose(&object, setup.config.standoff)?;
            Ok(PreparedScene {
                label,
                spec,
                object,
                initial,
            })
        })
        .collect::<Result<_>>()?;

    // Scene-major job grid; each job writes its own slot, so row order is
    // fixed by construction no matter which worker finishes first.
    let jobs: Vec<(usize, PlannerKind)> = (0..prepared.len())
        .flat_map(|s| setup.planners.iter().map(move |&p| (s, p)))
        .collect();
    let slots: Vec<Mutex<Option<Result<BenchRow>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..setup.threads.max(1) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(scene_index, planner)) = jobs.get(index) else {
                    break;
                };
                let row = run_job(setup, &prepared[scene_index], scene_index, planner);
                *slots[index].lock().expect("no worker panics while holding the lock") = Some(row);
            });
        }
    });

    let rows: Vec<BenchRow> = slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("scope joined all workers")
                .expect("every job index was claimed exactly once")
        })
        .collect::<Result<_>>()?;

    let aggregates = setup
        .planners
        .iter()
        .map(|&planner| {
            let of_planner: Vec<&BenchRow> = rows.iter().filter(|r| r.planner == planner).collect();
            let n = of_planner.len() as f64;
            PlannerAggregate {
                planner,
                mean_e_geom: of_planner.iter().map(|r| r.e_geom).sum::<f64>() / n,
                mean_e_com: of_planner.iter().map(|r| r.e_com).sum::<f64>() / n,
                mean_time_ms: of_planner.iter().map(|r| r.time_ms).sum::<f64>() / n,
            }
        })
        .collect();

    Ok(BenchReport { rows, aggregates })
}

fn run_job(
    setup: &BenchSetup,
    scene: &PreparedScene<'_>,
    scene_index: usize,
    planner: PlannerKind,
) -> Result<BenchRow> {
    let mut cmaes = setup.cmaes.clone();
    cmaes.seed = setup.base_seed.wrapping_add(scene_index as u64);
    let mut best_time = f64::INFINITY;
    let mut plan = None;
    for _ in 0..setup.reps.max(1) {
        let run = run_planner(
            planner,
            &scene.object,
            &setup.gripper,
            &scene.spec.n_app,
            &scene.initial,
            scene.spec.matching(),
            &setup.config,
            &cmaes,
        )?;
        best_time = best_time.min(run.planning_time_ms);
        plan = Some(run);
    }
    let plan = plan.expect("at least one repetition ran");
    let quality = plan.final_quality();
    log::info!(
        "{} / {planner}: e_geom {:.3e}, e_com {:.3e}, {} iterations, {:.2} ms",
        scene.label,
        quality.e_geom,
        quality.e_com,
        plan.iterations,
        best_time
    );
    Ok(BenchRow {
        scene: scene.label.to_string(),
        planner,
        e_geom: quality.e_geom,
        e_com: quality.e_com,
        iterations: plan.iterations,
        pairs: plan.pairs_total,
        time_ms: best_time,
    })
}
