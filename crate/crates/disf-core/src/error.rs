//! Error type shared by every module of the crate.
//!
//! Errors fall into two broad families that callers (notably the CLI) treat
//! differently: problems with the *inputs* (files, configs, scene geometry)
//! and problems encountered by a *planner* while it runs (degenerate linear
//! systems, missing correspondences). [`Error::is_input_error`] exposes that
//! split without forcing callers to match every variant.

use std::path::PathBuf;

/// Crate-wide error enum.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A surface that must contain at least one point was empty.
    #[error("empty surface: {0}")]
    EmptySurface(&'static str),

    /// A vector with norm below the representable threshold was passed where
    /// a direction was required.
    #[error("cannot normalize near-zero vector (norm {0:.3e})")]
    ZeroVector(f64),

    /// A matrix that must be a rotation failed the orthonormality check.
    #[error("matrix is not a rotation (orthonormality error {ortho:.3e}, det {det:.6})")]
    NotARotation { ortho: f64, det: f64 },

    /// No admissible gripper-to-object correspondence survived filtering.
    #[error("no admissible correspondences between gripper finger {finger} and the object")]
    NoCorrespondence { finger: usize },

    /// A normal-equation solve was too ill-conditioned to trust.
    #[error("normal equations rank-deficient in {stage} (condition estimate {condition:.3e})")]
    RankDeficient { stage: &'static str, condition: f64 },

    /// Every object normal in the correspondence set is orthogonal to the
    /// finger closing axis, so no aperture displacement changes the fit.
    #[error("aperture update degenerate: object normals are orthogonal to the closing axis")]
    DegenerateAperture,

    /// A planner stage failed; carries the iteration at which it happened.
    #[error("planner failed at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// A configuration value was rejected.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A referenced index does not exist in the surface it points into.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A PLY file could not be parsed; `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    PlyParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A point cloud lacks the per-vertex normal properties required here.
    #[error("{}: point cloud lacks per-vertex normals (nx, ny, nz)", path.display())]
    MissingNormals { path: PathBuf },

    /// A structured config file (scene, gripper, pairs) failed to parse.
    #[error("{}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },

    /// Two artifacts that must describe the same problem disagree.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad inputs (files, configs, scene geometry)
    /// as opposed to failures inside a planner run.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::EmptySurface(_)
            | Error::ZeroVector(_)
            | Error::NotARotation { .. }
            | Error::InvalidConfig(_)
            | Error::IndexOutOfRange(_)
            | Error::PlyParse { .. }
            | Error::MissingNormals { .. }
            | Error::ConfigParse { .. }
            | Error::Mismatch(_)
            | Error::Io(_) => true,
            Error::NoCorrespondence { .. }
            | Error::RankDeficient { .. }
            | Error::DegenerateAperture => false,
            Error::AtIteration { source, .. } => source.is_input_error(),
        }
    }

    /// Wraps `self` with the planner iteration at which it occurred.
    pub fn at_iteration(self, iteration: usize) -> Error {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
