//! Command-line front end for the grasp-planning library: plan grasps on
//! declarative scenes, replay and verify stored plans, benchmark the
//! planners against each other, and generate synthetic point clouds.
//!
//! All logic lives here so integration tests can drive it in-process; the
//! binary in `main.rs` only parses arguments and maps errors to exit codes.

pub mod args;
pub mod bench;
pub mod commands;
pub mod config;
pub mod planfile;

pub use args::{Cli, Command};
pub use bench::{run_bench, BenchReport, BenchRow, BenchSetup, PlannerAggregate};
pub use config::GripperSpec;
pub use planfile::PlanFile;

use disf_core::Error;

/// Runs the selected subcommand.
pub fn run(cli: &Cli) -> disf_core::Result<()> {
    match &cli.command {
        Command::Plan(args) => commands::cmd_plan(args),
        Command::Eval(args) => commands::cmd_eval(args),
        Command::Bench(args) => commands::cmd_bench(args),
        Command::Gen(args) => commands::cmd_gen(args),
    }
}

/// Process exit code for an error: 2 for bad inputs (scenes, configs,
/// files), 3 for planner failures (no correspondences, rank deficiency).
pub fn exit_code(error: &Error) -> i32 {
    if error.is_input_error() {
        2
    } else {
        3
    }
}

/// One-line machine-readable error record, printed to stderr on failure.
pub fn error_json(error: &Error) -> String {
    serde_json::json!({
        "error": error.to_string(),
        "kind": if error.is_input_error() { "input" } else { "planner" },
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_input_from_planner_errors() {
        assert_eq!(exit_code(&Error::InvalidConfig("x".into())), 2);
        assert_eq!(exit_code(&Error::NoCorrespondence { finger: 1 }), 3);
        assert_eq!(exit_code(&Error::DegenerateAperture), 3);
    }

    #[test]
    fn error_json_is_parseable_and_tagged() {
        let text = error_json(&Error::NoCorrespondence { finger: 2 });
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["kind"], "planner");
        assert!(value["error"].as_str().unwrap().contains("finger 2"));
    }
}
