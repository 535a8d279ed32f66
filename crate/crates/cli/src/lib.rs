//! Experiment runner around the `stochsense` library.
//!
//! A run is described by a single TOML file (see [`config`]), executed by one
//! of the task drivers in [`tasks`], and written to disk by [`output`] as a
//! `results.csv` (the machine-readable contract), a `summary.json` with
//! derived quantities, optional auxiliary CSVs and an SVG preview, plus a
//! `manifest.json` recording the config hash, seed, versions, and per-file
//! checksums. Identical config, seed, and thread count reproduce the CSV and
//! JSON outputs byte for byte; only the manifest's timing fields vary.

pub mod config;
pub mod output;
pub mod svg;
pub mod tasks;

use stochsense::distributions::DistributionError;
use stochsense::featmat::FeatmatError;
use stochsense::inference::InferenceError;
use stochsense::protocols::ProtocolError;
use stochsense::qsim::QsimError;
use stochsense::xxz::XxzError;

/// Process-level error classification; [`CliError::exit_code`] fixes the
/// contract visible to callers.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, unparsable, or invalid configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Valid configuration asking for more than the documented caps allow.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    /// A Monte Carlo average failed its stopping rule.
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    /// Filesystem failure while writing outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::ResourceCap(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

// Library errors reaching the driver after config validation are either a
// failed stopping rule (its own exit code) or an invalid derived input, which
// callers can only fix through the config.
impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::NoConvergence { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FeatmatError> for CliError {
    fn from(e: FeatmatError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<XxzError> for CliError {
    fn from(e: XxzError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<QsimError> for CliError {
    fn from(e: QsimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DistributionError> for CliError {
    fn from(e: DistributionError) -> Self {
        CliError::Config(e.to_string())
    }
}
