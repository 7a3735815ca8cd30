//! Builds planner, evolutionary-search, and gripper configurations from
//! command-line flags and optional TOML files.

use std::path::Path;

use disf_core::baseline::CmaEsConfig;
use disf_core::{Error, GripperModel, PadConfig, PlannerConfig, Result, UnitVec3};
use serde::{Deserialize, Serialize};

use crate::args::{CmaFlags, PlannerFlags};

/// Declarative gripper description: a rectangular pad grid per finger plus
/// the closing/approach axes and the aperture range. This is what gripper
/// TOML files contain and what plan files embed, so a stored plan can be
/// re-evaluated without the original command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripperSpec {
    pub pad: PadConfig,
    /// Closing direction (finger 1 sits on the negative side).
    pub v0: UnitVec3,
    /// Approach axis of the hand, orthogonal to `v0`.
    pub n_z0: UnitVec3,
    /// Minimum aperture in meters.
    pub d_min: f64,
    /// Maximum aperture in meters.
    pub d_max: f64,
}

impl Default for GripperSpec {
    fn default() -> Self {
        let model = GripperModel::default_parallel();
        GripperSpec {
            pad: PadConfig::default(),
            v0: *model.v0(),
            n_z0: *model.n_z0(),
            d_min: model.d_min(),
            d_max: model.d_max(),
        }
    }
}

impl GripperSpec {
    pub fn load(path: &Path) -> Result<GripperSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: format!("cannot read file: {e}"),
        })?;
        toml::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn build(&self) -> Result<GripperModel> {
        GripperModel::parallel_pads(&self.pad, self.v0, self.n_z0, self.d_min, self.d_max)
    }
}

/// Gripper spec from `--gripper` (or the default), with `--dmin`/`--dmax`
/// applied on top.
pub fn gripper_spec(flags: &PlannerFlags) -> Result<GripperSpec> {
    let mut spec = match &flags.gripper {
        Some(path) => GripperSpec::load(path)?,
        None => GripperSpec::default(),
    };
    if let Some(v) = flags.dmin {
        spec.d_min = v;
    }
    if let Some(v) = flags.dmax {
        spec.d_max = v;
    }
    Ok(spec)
}

/// Planner configuration: defaults with the given flags applied.
pub fn planner_config(flags: &PlannerFlags) -> PlannerConfig {
    let mut config = PlannerConfig::default();
    if let Some(v) = flags.alpha {
        config.alpha = v;
    }
    if let Some(v) = flags.beta {
        config.beta = v;
    }
    if let Some(v) = flags.d0 {
        config.d0 = v;
    }
    if let Some(v) = flags.delta_e {
        config.delta_e = v;
    }
    if let Some(v) = flags.max_iters {
        config.max_iterations = v;
    }
    if let Some(v) = flags.max_normal_angle {
        config.max_normal_angle_deg = v;
    }
    if let Some(v) = flags.standoff {
        config.standoff = v;
    }
    if let Some(v) = flags.lambda {
        config.lambda = v;
    }
    config
}

/// Evolutionary-search configuration: defaults with the given flags and
/// seed applied.
pub fn cma_config(cma: &CmaFlags, seed: u64) -> CmaEsConfig {
    let mut config = CmaEsConfig::default();
    config.seed = seed;
    if let Some(v) = cma.population {
        config.population = v;
    }
    if let Some(v) = cma.generations {
        config.generations = v;
    }
    if let Some(v) = cma.sigma0 {
        config.sigma0 = v;
    }
    config
}
