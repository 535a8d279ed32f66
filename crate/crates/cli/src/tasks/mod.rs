//! Task drivers: one module per task tag, a shared dispatcher, and the
//! helpers every sweep-producing driver uses.
//!
//! Seed discipline: classification/estimation sweeps consume RNG streams
//! under the master seed through a [`StreamBudget`], which hands out disjoint
//! offset blocks in config order. Stages that need their own stream space
//! (Gibbs chains, Monte Carlo cross-checks) run under seeds derived with
//! [`derive_seed`] so they can never collide with sweep streams.

pub mod bell_gaussian;
pub mod featmat;
pub mod ghz_classify;
pub mod ghz_estimate;
pub mod multicopy;
pub mod quadratic;
pub mod xxz;

use stochsense::inference::{ShotsToTarget, SweepResult};

use crate::config::TaskConfig;
use crate::output::{fmt_f64, json_f64, CsvTable, TaskResult};
use crate::CliError;

/// Runs the configured task to completion. The config must already be
/// validated.
pub fn run_task(task: &TaskConfig, seed: u64) -> Result<TaskResult, CliError> {
    match task {
        TaskConfig::BellGaussian(c) => bell_gaussian::run(c, seed),
        TaskConfig::GhzClassify(c) => ghz_classify::run(c, seed),
        TaskConfig::GhzEstimate(c) => ghz_estimate::run(c, seed),
        TaskConfig::Xxz(c) => xxz::run(c, seed),
        TaskConfig::Featmat(c) => featmat::run(c, seed),
        TaskConfig::Quadratic(c) => quadratic::run(c, seed),
        TaskConfig::Multicopy(c) => multicopy::run(c, seed),
    }
}

/// One SplitMix64 round; decorrelates seeds for stages that manage their own
/// stream indices.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hands out disjoint stream-offset blocks in allocation order.
#[derive(Debug, Default)]
pub struct StreamBudget {
    cursor: u64,
}

impl StreamBudget {
    pub fn block(&mut self, len: u64) -> u64 {
        let start = self.cursor;
        self.cursor += len;
        start
    }

    /// Block sized for one sweep: `grid points × trials` streams.
    pub fn sweep_block(&mut self, grid_len: usize, trials: u64) -> u64 {
        self.block(grid_len as u64 * trials)
    }
}

/// Appends one sweep's points to a table, prefixing each row with the fixed
/// axis values of this sweep.
pub fn push_sweep_rows(table: &mut CsvTable, prefix: &[String], sweep: &SweepResult) {
    for p in &sweep.points {
        let mut row = prefix.to_vec();
        row.push(p.shots.to_string());
        row.push(fmt_f64(p.metric));
        row.push(fmt_f64(p.stderr));
        row.push(p.trials.to_string());
        table.push(row);
    }
}

/// JSON form of a crossing: interpolated shots with its stderr band, each
/// `null` when the curve never reached the target.
pub fn crossing_json(crossing: &ShotsToTarget) -> serde_json::Value {
    serde_json::json!({
        "shots": json_f64(crossing.shots),
        "shots_lower": json_f64(crossing.shots_lower),
        "shots_upper": json_f64(crossing.shots_upper),
    })
}
