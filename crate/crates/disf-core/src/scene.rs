//! Declarative grasping scenes.
//!
//! A scene bundles everything a planner run needs besides the gripper: the
//! object (generated or loaded from a PLY file), the approach direction, an
//! optional initial-pose override, and optional fixed correspondences. Scenes
//! are plain TOML so fixtures can live next to the code or be passed on the
//! command line; a built-in suite of six scenes covers the shapes used by the
//! comparison benchmarks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correspondence::FixedPairSpec;
use crate::error::{Error, Result};
use crate::geom::UnitVec3;
use crate::ply;
use crate::solver::{InitialPose, Matching};
use crate::surface::OrientedSurface;
use crate::synth::SyntheticObject;

/// Where a scene's object comes from: exactly one of `file` or `generate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSource {
    /// Path to an ASCII PLY cloud, resolved relative to the scene file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Synthetic generator parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<SyntheticObject>,
}

/// A complete planning scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub object: ObjectSource,
    /// Predefined approach direction for this object.
    pub n_app: UnitVec3,
    /// Initial gripper pose; when absent, planners start at the object
    /// centroid (pulled back by their configured standoff).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialPose>,
    /// Fixed correspondences; when absent, nearest-neighbour matching is
    /// used and re-run every iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_pairs: Option<FixedPairSpec>,
}

impl SceneSpec {
    /// Parses scene TOML; `label` appears in error messages.
    pub fn parse(text: &str, label: &Path) -> Result<SceneSpec> {
        let scene: SceneSpec = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: label.to_path_buf(),
            message: e.to_string(),
        })?;
        scene.validate(label)?;
        Ok(scene)
    }

    /// Loads a scene file from disk.
    pub fn load(path: &Path) -> Result<SceneSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: format!("cannot read file: {e}"),
        })?;
        Self::parse(&text, path)
    }

    fn validate(&self, label: &Path) -> Result<()> {
        match (&self.object.file, &self.object.generate) {
            (Some(_), Some(_)) => Err(Error::ConfigParse {
                path: label.to_path_buf(),
                message: "object declares both 'file' and 'generate'; pick one".into(),
            }),
            (None, None) => Err(Error::ConfigParse {
                path: label.to_path_buf(),
                message: "object must declare either 'file' or 'generate'".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Materializes the object surface. Relative file paths resolve against
    /// `base_dir` (the scene file's directory).
    pub fn build_object(&self, base_dir: &Path) -> Result<OrientedSurface> {
        match (&self.object.file, &self.object.generate) {
            (Some(file), None) => {
                let resolved = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                ply::load_cloud(&resolved)
            }
            (None, Some(spec)) => spec.generate(),
            _ => unreachable!("validated at parse time"),
        }
    }

    /// The initial pose planners should start from: the scene override when
    /// present, otherwise the centroid default.
    pub fn initial_pose(&self, object: &OrientedSurface, standoff: f64) -> Result<InitialPose> {
        match &self.initial {
            Some(pose) => Ok(pose.clone()),
            None => InitialPose::default_for(object, &self.n_app, standoff),
        }
    }

    /// How correspondences are built for this scene.
    pub fn matching(&self) -> Matching<'_> {
        match &self.fixed_pairs {
            Some(spec) => Matching::Fixed(spec),
            None => Matching::Nearest,
        }
    }
}

/// Names of the built-in scenes, in benchmark order.
pub const BUILTIN_SCENE_NAMES: [&str; 6] = [
    "slab",
    "box",
    "cylinder",
    "sphere",
    "plate",
    "offset-composite",
];

/// Returns a built-in scene by name.
pub fn builtin_scene(name: &str) -> Option<SceneSpec> {
    let text = match name {
        "slab" => SLAB_SCENE,
        "box" => BOX_SCENE,
        "cylinder" => CYLINDER_SCENE,
        "sphere" => SPHERE_SCENE,
        "plate" => PLATE_SCENE,
        "offset-composite" => OFFSET_COMPOSITE_SCENE,
        _ => return None,
    };
    Some(SceneSpec::parse(text, Path::new(name)).expect("built-in scenes are valid"))
}

/// The default six-scene benchmark suite.
pub fn builtin_suite() -> Vec<SceneSpec> {
    BUILTIN_SCENE_NAMES
        .iter()
        .map(|name| builtin_scene(name).expect("name listed above"))
        .collect()
}

// The slab starts away from the hand (initial pose pinned at the origin,
// object centred off-axis) so a run exercises every stage: nothing moves
// without the translation stage, and the aperture must close from fully
// open to exactly the slab width.
const SLAB_SCENE: &str = r#"
name = "slab"
n_app = [0.0, 0.0, 1.0]

[object.generate]
kind = "slab"
width = 0.03
extent = 0.04
resolution = 5
center = [0.01, 0.005, -0.02]

[initial]
translation = [0.0, 0.0, 0.0]
"#;

const BOX_SCENE: &str = r#"
name = "box"
n_app = [0.0, 0.0, 1.0]

[object.generate]
kind = "box"
size = [0.04, 0.08, 0.05]
resolution = 4
"#;

const CYLINDER_SCENE: &str = r#"
name = "cylinder"
n_app = [0.0, 0.0, 1.0]

[object.generate]
kind = "cylinder"
radius = 0.02
height = 0.06
resolution = 24
"#;

const SPHERE_SCENE: &str = r#"
name = "sphere"
n_app = [0.0, 0.0, 1.0]

[object.generate]
kind = "sphere"
radius = 0.025
resolution = 20
"#;

const PLATE_SCENE: &str = r#"
name = "plate"
n_app = [0.0, 0.0, 1.0]

[object.generate]
kind = "plate"
side = 0.05
thickness = 0.012
resolution = 6
"#;

// The graspable slab sits at the origin while the ballast drags the true
// centroid toward +x. The initial pose starts over the slab, so planners
// that never re-centre stay visibly off the centroid.
const OFFSET_COMPOSITE_SCENE: &str = r#"
name = "offset-composite"
n_app = [0.0, 0.0, 1.0]

[object.generate]
kind = "offset-composite"
slab_width = 0.03
slab_extent = 0.05
ballast_offset = [0.06, 0.0, 0.0]
ballast_extent = 0.02
resolution = 5

[initial]
translation = [0.0, 0.0, 0.0]
"#;
