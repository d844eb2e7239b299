//! Simulation driver: bubble setup, partitioned runs, scaling experiments
//! and report output.

pub mod bubble;
pub mod config;
pub mod report;
pub mod scaling;
pub mod solver;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::mesh::MeshError;
use crate::perf::PerfError;
use crate::reference::ReferenceError;
use crate::storage::StorageError;
use crate::time::TimeError;

pub use bubble::init_bubble;
pub use config::{BubbleConfig, PerfScenario};
pub use scaling::{scale_experiment, ScalingRow};
pub use solver::{run, Failure, Problem, RunOptions, RunReport, StepDiagnostics};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Perf(#[from] PerfError),
    #[error("worker failed: {0}")]
    Worker(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Whether the error stems from user input rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Mesh(
                    MeshError::InvalidDimensions(_) | MeshError::TooManyPartitions { .. } | MeshError::MortonRange(_)
                )
                | HarnessError::Reference(_)
                | HarnessError::Perf(PerfError::Config(_) | PerfError::Machine(_))
                | HarnessError::Time(TimeError::ZeroCourant(..))
        )
    }
}
