//! Implementations of the four subcommands.

use std::path::{Path, PathBuf};

use disf_core::scene::{builtin_scene, SceneSpec, BUILTIN_SCENE_NAMES};
use disf_core::synth::SyntheticObject;
use disf_core::{evaluate_grasp, ply, run_planner, Error, PlannerKind, Result};

use crate::args::{BenchArgs, EvalArgs, GenArgs, PlanArgs, ReportFormat};
use crate::bench::{run_bench, BenchSetup};
use crate::config::{cma_config, gripper_spec, planner_config};
use crate::planfile::PlanFile;

/// Resolves a scene reference: references containing a path separator or a
/// dot are loaded as files; anything else must be a built-in scene name.
/// Returns the scene and the directory relative object files resolve
/// against.
pub fn resolve_scene(reference: &str) -> Result<(SceneSpec, PathBuf)> {
    let looks_like_path = reference.contains(std::path::MAIN_SEPARATOR)
        || reference.contains('/')
        || reference.contains('.');
    if !looks_like_path {
        return match builtin_scene(reference) {
            Some(scene) => Ok((scene, PathBuf::from("."))),
            None => Err(Error::InvalidConfig(format!(
                "unknown built-in scene '{reference}' (available: {}; pass a path such as \
                 ./{reference} to load a scene file)",
                BUILTIN_SCENE_NAMES.join(", ")
            ))),
        };
    }
    let path = Path::new(reference);
    let scene = SceneSpec::load(path)?;
    let base = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok((scene, base))
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::ConfigParse {
                path: path.to_path_buf(),
                message: format!("cannot write file: {e}"),
            })?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_plan(args: &PlanArgs) -> Result<()> {
    let (scene, base) = resolve_scene(&args.scene)?;
    let object = scene.build_object(&base)?;
    let gripper_spec = gripper_spec(&args.flags)?;
    let gripper = gripper_spec.build()?;
    let mut config = planner_config(&args.flags);
    if args.flags.d0.is_none() {
        // Keep "start fully open" semantics when only the range moved.
        config.d0 = config.d0.min(gripper.d_max());
    }
    let cmaes = cma_config(&args.cma, args.seed);
    let initial = scene.initial_pose(&object, config.standoff)?;
    let plan = run_planner(
        args.planner,
        &object,
        &gripper,
        &scene.n_app,
        &initial,
        scene.matching(),
        &config,
        &cmaes,
    )?;
    let quality = plan.final_quality();
    log::info!(
        "{} / {}: e_geom {:.3e}, e_com {:.3e}, aperture {:.4} m, {} iterations in {:.2} ms",
        args.scene,
        args.planner,
        quality.e_geom,
        quality.e_com,
        plan.final_aperture,
        plan.iterations,
        plan.planning_time_ms
    );
    let file = PlanFile {
        scene: Some(args.scene.clone()),
        gripper: gripper_spec,
        config,
        cmaes,
        plan,
    };
    write_output(args.out.as_deref(), &file.to_json())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let file = PlanFile::load(&args.plan)?;
    let reference = args
        .scene
        .clone()
        .or_else(|| file.scene.clone())
        .ok_or_else(|| {
            Error::InvalidConfig(
                "no scene given and the plan file records none; pass --scene".into(),
            )
        })?;
    let (scene, base) = resolve_scene(&reference)?;
    let object = scene.build_object(&base)?;
    let gripper = file.gripper.build()?;
    let mut report = evaluate_grasp(
        &object,
        &gripper,
        &scene.n_app,
        scene.matching(),
        &file.config,
        &file.plan.rotation,
        &file.plan.translation,
        file.plan.final_aperture,
    )?;
    report.iteration = file.plan.iterations;
    file.check_replay(&report, args.tolerance)?;
    log::info!(
        "replayed {} on {reference}: e_geom {:.3e}, e_com {:.3e} (within {:.1e} of the plan)",
        file.plan.planner,
        report.e_geom,
        report.e_com,
        args.tolerance
    );
    let mut text = serde_json::to_string_pretty(&report).expect("reports always serialize");
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let generator: SyntheticObject = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
                path: path.clone(),
                message: format!("cannot read file: {e}"),
            })?;
            toml::from_str(&text).map_err(|e| Error::ConfigParse {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => {
            let scene = builtin_scene(&args.builtin).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown built-in scene '{}' (available: {})",
                    args.builtin,
                    BUILTIN_SCENE_NAMES.join(", ")
                ))
            })?;
            scene
                .object
                .generate
                .expect("every built-in scene uses a generator")
        }
    };
    let cloud = generator.generate()?;
    log::info!("generated {} oriented points", cloud.len());
    match &args.out {
        Some(path) => {
            ply::save_cloud(path, &cloud)?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{}", ply::cloud_to_string(&cloud));
            Ok(())
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let scene_refs: Vec<String> = if args.scenes.is_empty() {
        BUILTIN_SCENE_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.scenes.clone()
    };
    let scenes = scene_refs
        .iter()
        .map(|reference| {
            let (scene, base) = resolve_scene(reference)?;
            Ok((reference.clone(), scene, base))
        })
        .collect::<Result<Vec<_>>>()?;
    let planners = if args.planners.is_empty() {
        vec![PlannerKind::Disf, PlannerKind::Visf, PlannerKind::CmaEs]
    } else {
        args.planners.clone()
    };
    let setup = BenchSetup {
        scenes,
        planners,
        gripper: gripper_spec(&args.flags)?.build()?,
        config: planner_config(&args.flags),
        cmaes: cma_config(&args.cma, args.seed),
        base_seed: args.seed,
        reps: args.reps,
        threads: args.threads,
    };
    let report = run_bench(&setup)?;
    let text = match args.format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(&report).expect("reports always serialize");
            text.push('\n');
            text
        }
        ReportFormat::Csv => report.to_csv(),
    };
    write_output(args.out.as_deref(), &text)
}
