//! The on-disk plan format: everything needed to replay a planned grasp.

use std::path::Path;

use disf_core::baseline::CmaEsConfig;
use disf_core::{Error, GraspPlan, PlannerConfig, QualityReport, Result};
use serde::{Deserialize, Serialize};

use crate::config::GripperSpec;

/// A planned grasp together with the configuration that produced it. The
/// embedded gripper and planner config make the file self-contained: `eval`
/// rebuilds the gripper from the spec and replays the stored pose on any
/// scene.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    /// Scene reference as given on the command line (built-in name or
    /// path), kept so `eval` can default to the same scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    pub gripper: GripperSpec,
    pub config: PlannerConfig,
    pub cmaes: CmaEsConfig,
    pub plan: GraspPlan,
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<PlanFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: format!("cannot read file: {e}"),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plan files always serialize");
        text.push('\n');
        text
    }

    /// Checks a freshly replayed quality report against the stored final
    /// trace entry, field by field.
    pub fn check_replay(&self, replayed: &QualityReport, tolerance: f64) -> Result<()> {
        let stored = self.plan.final_quality();
        let fields = [
            ("e_p", replayed.ep, stored.ep),
            ("e_n", replayed.en, stored.en),
            ("e_a", replayed.ea, stored.ea),
            ("e_na", replayed.e_na, stored.e_na),
            ("e_geom", replayed.e_geom, stored.e_geom),
            ("e_com", replayed.e_com, stored.e_com),
        ];
        for (name, got, want) in fields {
            let diff = (got - want).abs();
            if !(diff <= tolerance) {
                return Err(Error::Mismatch(format!(
                    "replayed {name} = {got:.6e} differs from the stored plan's {want:.6e} \
                     by {diff:.3e} (tolerance {tolerance:.1e}); was this plan made for a \
                     different scene or gripper?"
                )));
            }
        }
        Ok(())
    }
}
