//! Configuration, execution records, sweeps, convergence studies, and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod convergence;
pub mod record;
pub mod sweep;

use thiserror::Error;

use crate::timestepper::RunError;

pub use config::{CertificateRequest, ConfigError, DatumConfig, ProblemConfig, RunConfig, SCHEMA_VERSION};
pub use convergence::{convergence_suite, ConvergenceReport, RefinementStudy};
pub use record::{execute, replay, write_outputs, Execution, RunRecord, SeriesRow};
pub use sweep::{run_sweep, SweepManifest, SweepPlan};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl HarnessError {
    /// 2 for configuration errors, 3 for non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Run(RunError::NonConvergence { .. }) => 3,
            HarnessError::Run(RunError::InvalidControl(_)) => 2,
            _ => 1,
        }
    }
}
