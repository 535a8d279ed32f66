//! TOML experiment configuration: schema, defaults, and validation.
//!
//! A config file has a top-level `seed` and one `[task]` table selected by its
//! `name` field:
//!
//! ```toml
//! seed = 7
//!
//! [task]
//! name = "bell-gaussian"
//! sigma2 = 2.25
//! sigma_corr2 = 2.2275
//! c_values = [-0.25]
//! ```
//!
//! Validation separates two failure classes: impossible values (wrong sign,
//! NaN, inconsistent shapes) are config errors, while structurally valid
//! requests beyond the documented caps are resource errors with their own
//! exit code. Every diagnostic names the offending field.

use serde::Deserialize;
use std::path::Path;

use crate::CliError;

/// Largest shot count a sweep grid may request.
pub const MAX_SHOTS: u64 = 1 << 26;
/// Largest trial count per sweep point.
pub const MAX_TRIALS: u64 = 1_000_000;
/// Largest number of grid points in any swept list.
pub const MAX_GRID: usize = 64;
/// Largest register for outcome-table protocols (tables hold 2^n entries).
pub const MAX_TABLE_QUBITS: usize = 12;
/// Largest Gibbs pool materialized in memory.
pub const MAX_POOL: usize = 10_000_000;
/// Largest thermalization prefix per Metropolis chain.
pub const MAX_TAU_THERM: usize = 10_000_000;
/// Largest decorrelation stride between emitted configurations.
pub const MAX_TAU_SWEEP: usize = 1_000_000;
/// Largest number of parallel Metropolis chains.
pub const MAX_CHAINS: usize = 1024;
/// Largest variable count for the quadratic-constraint task.
pub const MAX_QUADRATIC_VARS: usize = 16;
/// Largest per-variable-count sample budget for the quadratic task.
pub const MAX_QUADRATIC_SAMPLES: u64 = 10_000;
/// Largest grid for the multi-copy phase scan and density average.
pub const MAX_MULTICOPY_GRID: usize = 8192;

/// Task tags accepted by the `name` field, in `list-tasks` order.
pub const TASK_TAGS: [&str; 7] = [
    "bell-gaussian",
    "ghz-classify",
    "ghz-estimate",
    "xxz",
    "featmat",
    "quadratic",
    "multicopy",
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stochastic stage derives its stream from it.
    pub seed: u64,
    pub task: TaskConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum TaskConfig {
    BellGaussian(BellGaussianConfig),
    GhzClassify(GhzClassifyConfig),
    GhzEstimate(GhzEstimateConfig),
    Xxz(XxzTaskConfig),
    Featmat(FeatmatConfig),
    Quadratic(QuadraticConfig),
    Multicopy(MulticopyConfig),
}

impl TaskConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            TaskConfig::BellGaussian(_) => "bell-gaussian",
            TaskConfig::GhzClassify(_) => "ghz-classify",
            TaskConfig::GhzEstimate(_) => "ghz-estimate",
            TaskConfig::Xxz(_) => "xxz",
            TaskConfig::Featmat(_) => "featmat",
            TaskConfig::Quadratic(_) => "quadratic",
            TaskConfig::Multicopy(_) => "multicopy",
        }
    }
}

// ---------------------------------------------------------------------------
// Defaults
// ---------------------------------------------------------------------------

fn default_trials() -> u64 {
    2000
}

fn default_target_accuracy() -> f64 {
    0.95
}

fn default_target_mse() -> f64 {
    1e-4
}

fn default_shots() -> Vec<u64> {
    stochsense::inference::log2_shots_grid(1, 22)
}

fn default_estimate_shots() -> Vec<u64> {
    stochsense::inference::log2_shots_grid(6, 24)
}

fn default_xxz_shots() -> Vec<u64> {
    stochsense::inference::log2_shots_grid(1, 16)
}

fn default_estimate_trials() -> u64 {
    800
}

fn default_c_train() -> Vec<f64> {
    (-4..=4).map(|k| 0.05 * k as f64).collect()
}

fn default_c_eval() -> Vec<f64> {
    vec![-0.15, -0.05, 0.05, 0.15]
}

fn default_j_coupling() -> f64 {
    1.0
}

fn default_spin_coupling() -> f64 {
    std::f64::consts::PI
}

fn default_pool_size() -> usize {
    200_000
}

fn default_featmat_pool_size() -> usize {
    1_000_000
}

fn default_chains() -> usize {
    16
}

fn default_tau_therm() -> usize {
    10_000
}

fn default_tau_sweep() -> usize {
    200
}

fn default_delta_s() -> f64 {
    0.2
}

fn default_delta_phi() -> f64 {
    std::f64::consts::FRAC_PI_4
}

fn default_search_max_qubits() -> usize {
    3
}

fn default_true() -> bool {
    true
}

fn default_quadratic_samples() -> u64 {
    50
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_multicopy_grid() -> usize {
    16
}

// ---------------------------------------------------------------------------
// Task schemas
// ---------------------------------------------------------------------------

/// Two-qubit correlated-Gaussian classification: Bell readout versus the
/// product readout, swept over shot counts for each constraint value in
/// `c_values` (class means are ±(c/2, −c/2)).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellGaussianConfig {
    /// Per-parameter variance σ² (rad²).
    pub sigma2: f64,
    /// Cross-covariance σ_corr² (rad²); |σ_corr²| ≤ σ² keeps the matrix PSD.
    pub sigma_corr2: f64,
    /// Mean-separation values c (rad), one sweep pair per entry.
    pub c_values: Vec<f64>,
    #[serde(default = "default_shots")]
    pub shots: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_target_accuracy")]
    pub target_accuracy: f64,
    /// Cross-check the analytic outcome tables against a Monte Carlo average
    /// before sweeping (slower; failure of its stopping rule is exit 4).
    #[serde(default)]
    pub mc_check: bool,
}

/// Sum-constrained classification of c = ±c: GHZ readout versus the product
/// readout, swept over register sizes.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhzClassifyConfig {
    pub n_values: Vec<usize>,
    /// Constraint magnitude c (rad); classes are Σθ = +c and Σθ = −c.
    pub c: f64,
    #[serde(default = "default_shots")]
    pub shots: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_target_accuracy")]
    pub target_accuracy: f64,
}

/// Sum-constrained estimation of c near zero: linear estimators trained on
/// averaged outcome tables at `c_train`, evaluated at `c_eval`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhzEstimateConfig {
    pub n_values: Vec<usize>,
    #[serde(default = "default_c_train")]
    pub c_train: Vec<f64>,
    #[serde(default = "default_c_eval")]
    pub c_eval: Vec<f64>,
    #[serde(default = "default_estimate_shots")]
    pub shots: Vec<u64>,
    #[serde(default = "default_estimate_trials")]
    pub trials: u64,
    #[serde(default = "default_target_mse")]
    pub target_mse: f64,
}

/// Classification of the magnetization sign of an XXZ-ring Gibbs ensemble,
/// swept over ring sizes and temperatures.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxzTaskConfig {
    pub n_values: Vec<usize>,
    /// Z-coupling anisotropy Δ.
    pub delta: f64,
    /// Exchange coupling J (sets the energy unit).
    #[serde(default = "default_j_coupling")]
    pub j_coupling: f64,
    /// Temperatures T (units of J/k_B), strictly ascending.
    pub temperatures: Vec<f64>,
    /// Conserved total magnetization magnitude |M|; classes are M = ±|M|.
    pub m_abs: f64,
    /// Spin-to-phase conversion factor γητ: θ_j = coupling·s_j (rad).
    #[serde(default = "default_spin_coupling")]
    pub coupling: f64,
    #[serde(default = "default_xxz_shots")]
    pub shots: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_target_accuracy")]
    pub target_accuracy: f64,
    /// Gibbs pool size per (n, T, sign) ensemble.
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_tau_therm")]
    pub tau_therm: usize,
    #[serde(default = "default_tau_sweep")]
    pub tau_sweep: usize,
    #[serde(default = "default_delta_s")]
    pub delta_s: f64,
    #[serde(default = "default_delta_phi")]
    pub delta_phi: f64,
    /// Also export one sampled chain (largest n, first T, M = +|M|) as
    /// `ensemble.csv`.
    #[serde(default)]
    pub export_ensemble: bool,
}

/// Characteristic feature-matrix report: optimal separations, product-probe
/// search, bounds, and shot lower bounds for one distribution family.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatmatConfig {
    pub distribution: FeatmatDistribution,
    /// Run the product-probe search up to this register size (0 disables).
    #[serde(default = "default_search_max_qubits")]
    pub search_max_qubits: usize,
    /// Export the full feature matrix of the largest register as CSV plus a
    /// magnitude heat-map SVG.
    #[serde(default = "default_true")]
    pub export_matrix: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FeatmatDistribution {
    /// Σθ = +c versus Σθ = −c, uniform otherwise; analytic χ.
    SumConstrained { c: f64, n_values: Vec<usize> },
    /// XXZ Gibbs ensembles at M = ±|M|; empirical χ from a sampled pool.
    Xxz {
        n: usize,
        delta: f64,
        #[serde(default = "default_j_coupling")]
        j_coupling: f64,
        temperature: f64,
        m_abs: f64,
        #[serde(default = "default_spin_coupling")]
        coupling: f64,
        #[serde(default = "default_featmat_pool_size")]
        pool_size: usize,
        #[serde(default = "default_chains")]
        chains: usize,
        #[serde(default = "default_tau_therm")]
        tau_therm: usize,
        #[serde(default = "default_tau_sweep")]
        tau_sweep: usize,
        #[serde(default = "default_delta_s")]
        delta_s: f64,
        #[serde(default = "default_delta_phi")]
        delta_phi: f64,
    },
}

/// Overlap of the quadratic-constraint evolution with the all-ones register
/// state, plus its first-order response to a constraint perturbation.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticConfig {
    /// Variable counts (each even).
    pub n_var_values: Vec<usize>,
    /// Constraint value C > 0 (rad²).
    pub c: f64,
    /// Random constraint-satisfying parameter draws per variable count.
    #[serde(default = "default_quadratic_samples")]
    pub samples: u64,
    /// Constraint perturbation ε (rad²) for the response column.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

/// Relative-phase scan of the two multi-copy protocols against the averaged
/// single-copy density matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MulticopyConfig {
    /// Number of scanned relative phases φ over [0, 2π).
    #[serde(default = "default_multicopy_grid")]
    pub phase_points: usize,
    /// Averaging grid for the single-copy density matrix.
    #[serde(default = "default_multicopy_grid")]
    pub density_grid: usize,
}

// ---------------------------------------------------------------------------
// Loading and validation
// ---------------------------------------------------------------------------

impl ExperimentConfig {
    /// Parses a config file, returning the raw bytes alongside for hashing.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| CliError::Config(format!("{} is not UTF-8: {e}", path.display())))?;
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{e}")))?;
        Ok((config, bytes))
    }

    /// Full semantic validation; the first violated rule is reported with the
    /// offending field's path.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.task {
            TaskConfig::BellGaussian(c) => c.validate(),
            TaskConfig::GhzClassify(c) => c.validate(),
            TaskConfig::GhzEstimate(c) => c.validate(),
            TaskConfig::Xxz(c) => c.validate(),
            TaskConfig::Featmat(c) => c.validate(),
            TaskConfig::Quadratic(c) => c.validate(),
            TaskConfig::Multicopy(c) => c.validate(),
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("task.{field}: {msg}"))
}

fn cap_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::ResourceCap(format!("task.{field}: {msg}"))
}

fn check_finite(field: &str, value: f64) -> Result<(), CliError> {
    if !value.is_finite() {
        return Err(config_err(field, format!("must be finite, got {value}")));
    }
    Ok(())
}

fn check_finite_list(field: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(config_err(field, "must not be empty"));
    }
    if values.len() > MAX_GRID {
        return Err(cap_err(field, format!("{} entries exceed the grid cap {MAX_GRID}", values.len())));
    }
    for v in values {
        check_finite(field, *v)?;
    }
    Ok(())
}

fn check_shots(field: &str, shots: &[u64]) -> Result<(), CliError> {
    if shots.is_empty() {
        return Err(config_err(field, "must not be empty"));
    }
    if shots[0] == 0 {
        return Err(config_err(field, "shot counts must be positive"));
    }
    if shots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_err(field, "shot counts must be strictly ascending"));
    }
    if shots.len() > MAX_GRID {
        return Err(cap_err(field, format!("{} entries exceed the grid cap {MAX_GRID}", shots.len())));
    }
    let last = *shots.last().unwrap();
    if last > MAX_SHOTS {
        return Err(cap_err(field, format!("{last} shots exceed the cap {MAX_SHOTS}")));
    }
    Ok(())
}

fn check_trials(field: &str, trials: u64) -> Result<(), CliError> {
    if trials < stochsense::inference::MIN_TRIALS {
        return Err(config_err(
            field,
            format!("needs at least {} trials, got {trials}", stochsense::inference::MIN_TRIALS),
        ));
    }
    if trials > MAX_TRIALS {
        return Err(cap_err(field, format!("{trials} trials exceed the cap {MAX_TRIALS}")));
    }
    Ok(())
}

fn check_n_values(field: &str, n_values: &[usize], min: usize) -> Result<(), CliError> {
    if n_values.is_empty() {
        return Err(config_err(field, "must not be empty"));
    }
    if n_values.len() > MAX_GRID {
        return Err(cap_err(field, format!("{} entries exceed the grid cap {MAX_GRID}", n_values.len())));
    }
    for &n in n_values {
        if n < min {
            return Err(config_err(field, format!("register size must be at least {min}, got {n}")));
        }
        if n > MAX_TABLE_QUBITS {
            return Err(cap_err(
                field,
                format!("{n} qubits exceed the outcome-table cap {MAX_TABLE_QUBITS}"),
            ));
        }
    }
    Ok(())
}

fn check_target_fraction(field: &str, target: f64) -> Result<(), CliError> {
    if !(target > 0.5 && target < 1.0) {
        return Err(config_err(field, format!("must lie in (0.5, 1), got {target}")));
    }
    Ok(())
}

fn check_metropolis(
    prefix: &str,
    pool_size: usize,
    chains: usize,
    tau_therm: usize,
    tau_sweep: usize,
    delta_s: f64,
    delta_phi: f64,
) -> Result<(), CliError> {
    let field = |name: &str| format!("{prefix}{name}");
    if pool_size == 0 {
        return Err(config_err(&field("pool_size"), "must be positive"));
    }
    if pool_size > MAX_POOL {
        return Err(cap_err(&field("pool_size"), format!("{pool_size} exceeds the cap {MAX_POOL}")));
    }
    if chains == 0 {
        return Err(config_err(&field("chains"), "must be positive"));
    }
    if chains > MAX_CHAINS {
        return Err(cap_err(&field("chains"), format!("{chains} exceeds the cap {MAX_CHAINS}")));
    }
    if tau_therm > MAX_TAU_THERM {
        return Err(cap_err(&field("tau_therm"), format!("{tau_therm} exceeds the cap {MAX_TAU_THERM}")));
    }
    if tau_sweep == 0 {
        return Err(config_err(&field("tau_sweep"), "must be positive"));
    }
    if tau_sweep > MAX_TAU_SWEEP {
        return Err(cap_err(&field("tau_sweep"), format!("{tau_sweep} exceeds the cap {MAX_TAU_SWEEP}")));
    }
    if !(delta_s > 0.0 && delta_s.is_finite()) {
        return Err(config_err(&field("delta_s"), format!("must be positive, got {delta_s}")));
    }
    if !(delta_phi > 0.0 && delta_phi.is_finite()) {
        return Err(config_err(&field("delta_phi"), format!("must be positive, got {delta_phi}")));
    }
    Ok(())
}

impl BellGaussianConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_finite("sigma2", self.sigma2)?;
        check_finite("sigma_corr2", self.sigma_corr2)?;
        if self.sigma2 <= 0.0 {
            return Err(config_err("sigma2", format!("variance must be positive, got {}", self.sigma2)));
        }
        if self.sigma_corr2.abs() > self.sigma2 {
            return Err(config_err(
                "sigma_corr2",
                format!(
                    "|{}| exceeds sigma2 = {}; the covariance matrix must stay positive semidefinite",
                    self.sigma_corr2, self.sigma2
                ),
            ));
        }
        check_finite_list("c_values", &self.c_values)?;
        check_shots("shots", &self.shots)?;
        check_trials("trials", self.trials)?;
        check_target_fraction("target_accuracy", self.target_accuracy)
    }
}

impl GhzClassifyConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_n_values("n_values", &self.n_values, 2)?;
        check_finite("c", self.c)?;
        if self.c == 0.0 {
            return Err(config_err("c", "classes coincide at c = 0"));
        }
        check_shots("shots", &self.shots)?;
        check_trials("trials", self.trials)?;
        check_target_fraction("target_accuracy", self.target_accuracy)
    }
}

impl GhzEstimateConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_n_values("n_values", &self.n_values, 2)?;
        check_finite_list("c_train", &self.c_train)?;
        if self.c_train.len() < 2 {
            return Err(config_err("c_train", "needs at least two training values"));
        }
        check_finite_list("c_eval", &self.c_eval)?;
        check_shots("shots", &self.shots)?;
        check_trials("trials", self.trials)?;
        if !(self.target_mse > 0.0 && self.target_mse.is_finite()) {
            return Err(config_err("target_mse", format!("must be positive, got {}", self.target_mse)));
        }
        Ok(())
    }
}

impl XxzTaskConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_n_values("n_values", &self.n_values, 2)?;
        check_finite("delta", self.delta)?;
        check_finite("j_coupling", self.j_coupling)?;
        if self.j_coupling == 0.0 {
            return Err(config_err("j_coupling", "must be nonzero"));
        }
        check_finite_list("temperatures", &self.temperatures)?;
        if self.temperatures.iter().any(|&t| t <= 0.0) {
            return Err(config_err("temperatures", "temperatures must be positive"));
        }
        if self.temperatures.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("temperatures", "temperatures must be strictly ascending"));
        }
        check_finite("m_abs", self.m_abs)?;
        let n_min = *self.n_values.iter().min().unwrap();
        if !(self.m_abs > 0.0) {
            return Err(config_err("m_abs", "classes coincide at |M| = 0"));
        }
        if self.m_abs > n_min as f64 {
            return Err(config_err(
                "m_abs",
                format!("total magnetization {} exceeds the smallest ring size {n_min}", self.m_abs),
            ));
        }
        check_finite("coupling", self.coupling)?;
        if self.coupling == 0.0 {
            return Err(config_err("coupling", "must be nonzero"));
        }
        check_shots("shots", &self.shots)?;
        check_trials("trials", self.trials)?;
        check_target_fraction("target_accuracy", self.target_accuracy)?;
        check_metropolis(
            "",
            self.pool_size,
            self.chains,
            self.tau_therm,
            self.tau_sweep,
            self.delta_s,
            self.delta_phi,
        )
    }
}

impl FeatmatConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.search_max_qubits > stochsense::featmat::MAX_SEARCH_QUBITS {
            return Err(cap_err(
                "search_max_qubits",
                format!(
                    "{} exceeds the product-search cap {}",
                    self.search_max_qubits,
                    stochsense::featmat::MAX_SEARCH_QUBITS
                ),
            ));
        }
        match &self.distribution {
            FeatmatDistribution::SumConstrained { c, n_values } => {
                check_finite("distribution.c", *c)?;
                if *c == 0.0 {
                    return Err(config_err("distribution.c", "distributions coincide at c = 0"));
                }
                if n_values.is_empty() {
                    return Err(config_err("distribution.n_values", "must not be empty"));
                }
                if n_values.len() > MAX_GRID {
                    return Err(cap_err(
                        "distribution.n_values",
                        format!("{} entries exceed the grid cap {MAX_GRID}", n_values.len()),
                    ));
                }
                for &n in n_values {
                    if n < 2 {
                        return Err(config_err(
                            "distribution.n_values",
                            format!("register size must be at least 2, got {n}"),
                        ));
                    }
                    if n > stochsense::featmat::MAX_FEATURE_QUBITS {
                        return Err(cap_err(
                            "distribution.n_values",
                            format!(
                                "{n} qubits exceed the feature-matrix cap {}",
                                stochsense::featmat::MAX_FEATURE_QUBITS
                            ),
                        ));
                    }
                }
                Ok(())
            }
            FeatmatDistribution::Xxz {
                n,
                delta,
                j_coupling,
                temperature,
                m_abs,
                coupling,
                pool_size,
                chains,
                tau_therm,
                tau_sweep,
                delta_s,
                delta_phi,
            } => {
                if *n < 2 {
                    return Err(config_err("distribution.n", format!("needs at least 2 spins, got {n}")));
                }
                if *n > stochsense::featmat::MAX_FEATURE_QUBITS {
                    return Err(cap_err(
                        "distribution.n",
                        format!(
                            "{n} qubits exceed the feature-matrix cap {}",
                            stochsense::featmat::MAX_FEATURE_QUBITS
                        ),
                    ));
                }
                check_finite("distribution.delta", *delta)?;
                check_finite("distribution.j_coupling", *j_coupling)?;
                if *j_coupling == 0.0 {
                    return Err(config_err("distribution.j_coupling", "must be nonzero"));
                }
                if !(*temperature > 0.0 && temperature.is_finite()) {
                    return Err(config_err(
                        "distribution.temperature",
                        format!("must be positive, got {temperature}"),
                    ));
                }
                check_finite("distribution.m_abs", *m_abs)?;
                if !(*m_abs > 0.0) {
                    return Err(config_err("distribution.m_abs", "distributions coincide at |M| = 0"));
                }
                if *m_abs > *n as f64 {
                    return Err(config_err(
                        "distribution.m_abs",
                        format!("total magnetization {m_abs} exceeds the ring size {n}"),
                    ));
                }
                check_finite("distribution.coupling", *coupling)?;
                if *coupling == 0.0 {
                    return Err(config_err("distribution.coupling", "must be nonzero"));
                }
                check_metropolis(
                    "distribution.",
                    *pool_size,
                    *chains,
                    *tau_therm,
                    *tau_sweep,
                    *delta_s,
                    *delta_phi,
                )
            }
        }
    }
}

impl QuadraticConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.n_var_values.is_empty() {
            return Err(config_err("n_var_values", "must not be empty"));
        }
        if self.n_var_values.len() > MAX_GRID {
            return Err(cap_err(
                "n_var_values",
                format!("{} entries exceed the grid cap {MAX_GRID}", self.n_var_values.len()),
            ));
        }
        for &n in &self.n_var_values {
            if n == 0 || n % 2 != 0 {
                return Err(config_err(
                    "n_var_values",
                    format!("variable counts must be positive and even, got {n}"),
                ));
            }
            if n > MAX_QUADRATIC_VARS {
                return Err(cap_err(
                    "n_var_values",
                    format!("{n} variables exceed the cap {MAX_QUADRATIC_VARS}"),
                ));
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(config_err("c", format!("constraint value must be positive, got {}", self.c)));
        }
        if self.samples == 0 {
            return Err(config_err("samples", "must be positive"));
        }
        if self.samples > MAX_QUADRATIC_SAMPLES {
            return Err(cap_err(
                "samples",
                format!("{} samples exceed the cap {MAX_QUADRATIC_SAMPLES}", self.samples),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(config_err("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if self.epsilon >= self.c {
            return Err(config_err(
                "epsilon",
                format!("perturbation {} must stay below c = {}", self.epsilon, self.c),
            ));
        }
        Ok(())
    }
}

impl MulticopyConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.phase_points == 0 {
            return Err(config_err("phase_points", "must be positive"));
        }
        if self.phase_points > MAX_MULTICOPY_GRID {
            return Err(cap_err(
                "phase_points",
                format!("{} exceeds the cap {MAX_MULTICOPY_GRID}", self.phase_points),
            ));
        }
        // Frequencies reach |q·θ| combinations up to 2 per 2π of the scan, so
        // 8 grid points already integrate the trigonometric average exactly;
        // enforcing a floor keeps misconfigured averages from silently lying.
        if self.density_grid < 8 {
            return Err(config_err(
                "density_grid",
                format!("needs at least 8 points for an exact average, got {}", self.density_grid),
            ));
        }
        if self.density_grid > MAX_MULTICOPY_GRID {
            return Err(cap_err(
                "density_grid",
                format!("{} exceeds the cap {MAX_MULTICOPY_GRID}", self.density_grid),
            ));
        }
        Ok(())
    }
}
