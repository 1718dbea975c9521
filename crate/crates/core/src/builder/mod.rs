//! Frequentist model construction from telemetry: state keys per time step,
//! transition counts, exact estimation and assembly of the A/B/C variants.

mod assemble;
mod config;
mod counts;
mod dot;

pub use assemble::{assemble, Assembled, Repair, RepairKind, ENVIRONMENT, ROCKET};
pub use config::{BuildConfig, Variant};
pub use counts::{
    build_counts, estimate, horizon_steps, Action, CountTable, Counts, Estimates, NodeKey,
    SampleSum, StateKey,
};
pub use dot::{export_dot, DotOptions};

use thiserror::Error;

use crate::trajectory::{Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("config: {0}")]
    Config(String),
    #[error("no trajectories")]
    NoTrajectories,
    #[error("non-unique initial state: {0} vs {1}")]
    NonUniqueInitial(String, String),
    #[error("no data for ({state}, {action})")]
    NoData { state: String, action: String },
    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        source: TrajectoryError,
    },
    #[error("trajectory {index} covers {steps} steps, horizon needs {horizon}")]
    Short {
        index: usize,
        steps: usize,
        horizon: usize,
    },
    #[error("reference: {0}")]
    Reference(TrajectoryError),
    #[error("reference covers {steps} steps, horizon needs {horizon}")]
    ReferenceShort { steps: usize, horizon: usize },
}

impl From<TrajectoryError> for BuildError {
    fn from(e: TrajectoryError) -> Self {
        BuildError::Config(e.to_string())
    }
}

/// Counts, estimates and assembles in one go.
pub fn build_model(
    trajs: &[Trajectory],
    reference: &Trajectory,
    cfg: &BuildConfig,
) -> Result<Assembled, BuildError> {
    let counts = build_counts(trajs, reference, cfg)?;
    let est = estimate(&counts.table)?;
    Ok(assemble(&counts, &est, cfg))
}
