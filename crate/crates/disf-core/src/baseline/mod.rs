//! Comparison planners sharing the staged planner's matching, quality
//! measures, and result format: a joint 6-DoF linearized fitter
//! ([`visf_plan`]) and a derivative-free evolutionary search
//! ([`cmaes_plan`]).

pub mod cmaes;
pub mod visf;

pub use cmaes::{cmaes_plan, CmaEsConfig};
pub use visf::{joint_pose_system, visf_plan};
