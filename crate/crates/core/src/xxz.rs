//! Classical XXZ spin ring sampled by a magnetization-conserving Metropolis
//! chain, plus the conversion from spin configurations to sensing phases.
//!
//! Spins are unit vectors parameterized by their Z component `s ∈ [−1, 1]`
//! and azimuthal angle `φ`; the in-plane length is `f(s) = √(1−s²)`. The ring
//! energy is
//!
//! ```text
//! E = −J Σ_j [ f(s_j) f(s_{j+1}) cos(φ_{j+1} − φ_j) + Δ s_j s_{j+1} ]
//! ```
//!
//! with indices mod n, so a two-spin ring counts its single pair twice.
//! Proposals transfer Z-weight between two spins, which conserves Σs exactly;
//! the Gibbs ensemble is therefore conditioned on total magnetization M.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{self, Stream};

#[derive(Debug, Error)]
pub enum XxzError {
    #[error("ring needs at least 2 spins, got {0}")]
    TooFewSpins(usize),
    #[error("total magnetization {m} exceeds spin count {n}")]
    MagnetizationOutOfRange { m: f64, n: usize },
    #[error("inverse temperature must be nonnegative and finite, got {0}")]
    BadBeta(f64),
    #[error("metropolis settings: {0} must be positive")]
    BadSetting(&'static str),
}

/// Ring parameters. `beta` is inverse temperature (k_B = 1), `m_total` the
/// conserved total Z-magnetization Σs_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XxzParams {
    pub n: usize,
    pub j_coupling: f64,
    pub delta: f64,
    pub beta: f64,
    pub m_total: f64,
}

impl XxzParams {
    pub fn validate(&self) -> Result<(), XxzError> {
        if self.n < 2 {
            return Err(XxzError::TooFewSpins(self.n));
        }
        if self.m_total.abs() > self.n as f64 {
            return Err(XxzError::MagnetizationOutOfRange { m: self.m_total, n: self.n });
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(XxzError::BadBeta(self.beta));
        }
        Ok(())
    }
}

/// One spin configuration; `s[j] ∈ [−1,1]`, `phi[j] ∈ [0,2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SpinConfig {
    pub fn total_magnetization(&self) -> f64 {
        self.s.iter().sum()
    }
}

/// Metropolis chain schedule. A run performs `tau_therm` thermalization steps
/// and then emits one configuration every `tau_sweep` steps until `n_samples`
/// configurations have been collected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisSettings {
    pub tau_therm: usize,
    pub tau_sweep: usize,
    pub delta_s: f64,
    pub delta_phi: f64,
    pub n_samples: usize,
}

impl Default for MetropolisSettings {
    fn default() -> Self {
        // delta_s / delta_phi target 30-60% acceptance near beta*J ~ 1.
        Self {
            tau_therm: 10_000,
            tau_sweep: 500,
            delta_s: 0.2,
            delta_phi: std::f64::consts::FRAC_PI_4,
            n_samples: 1000,
        }
    }
}

impl MetropolisSettings {
    pub fn validate(&self) -> Result<(), XxzError> {
        if self.tau_sweep == 0 {
            return Err(XxzError::BadSetting("tau_sweep"));
        }
        if self.n_samples == 0 {
            return Err(XxzError::BadSetting("n_samples"));
        }
        if !(self.delta_s > 0.0) {
            return Err(XxzError::BadSetting("delta_s"));
        }
        if !(self.delta_phi > 0.0) {
            return Err(XxzError::BadSetting("delta_phi"));
        }
        Ok(())
    }
}

#[inline]
fn in_plane(s: f64) -> f64 {
    // Guard against -1e-17 style round-off under the sqrt.
    (1.0 - s * s).max(0.0).sqrt()
}

/// Ring energy in the angular parameterization.
pub fn energy(config: &SpinConfig, params: &XxzParams) -> f64 {
    let n = config.s.len();
    let mut e = 0.0;
    for j in 0..n {
        e += bond_energy(config, params, j);
    }
    e
}

/// Energy of the bond joining spins `j` and `j+1 (mod n)`.
#[inline]
fn bond_energy(config: &SpinConfig, params: &XxzParams, j: usize) -> f64 {
    let k = (j + 1) % config.s.len();
    let xy = in_plane(config.s[j]) * in_plane(config.s[k]) * (config.phi[k] - config.phi[j]).cos();
    -params.j_coupling * (xy + params.delta * config.s[j] * config.s[k])
}

/// Bonds whose energy depends on spins `j` or `k` (each spin touches the bond
/// it starts and the one ending on it), deduplicated.
#[inline]
fn affected_bonds(n: usize, j: usize, k: usize) -> ([usize; 4], usize) {
    let cand = [(j + n - 1) % n, j, (k + n - 1) % n, k];
    let mut out = [0usize; 4];
    let mut len = 0;
    for &b in &cand {
        if !out[..len].contains(&b) {
            out[len] = b;
            len += 1;
        }
    }
    (out, len)
}

/// Statistics of one Metropolis run, for diagnostics and tuning.
#[derive(Debug, Clone, Copy)]
pub struct RunStats {
    pub steps: usize,
    pub accepted: usize,
    /// Lowest total energy seen after thermalization.
    pub min_energy: f64,
    /// Mean total energy over the emitted configurations.
    pub mean_sampled_energy: f64,
}

impl RunStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.steps as f64
    }
}

/// Magnetization-conserving Metropolis sampler.
///
/// Starts from s_j = M/n with uniform phases. Each step picks two distinct
/// spins, perturbs both their phases independently by U(−δφ, δφ), transfers
/// ds ~ U(−δs, δs) of Z-weight from one to the other, rejects outright if
/// either Z component leaves [−1, 1] (rejection, not clamping, keeps the
/// stationary distribution on the valid domain), and otherwise accepts with
/// probability min(1, e^{−β δE}). δE is evaluated over the affected bonds
/// only.
pub fn metropolis_sample(
    params: &XxzParams,
    settings: &MetropolisSettings,
    rng: &mut Stream,
) -> Result<Vec<SpinConfig>, XxzError> {
    metropolis_sample_stats(params, settings, rng).map(|(configs, _)| configs)
}

/// [`metropolis_sample`] plus run statistics.
pub fn metropolis_sample_stats(
    params: &XxzParams,
    settings: &MetropolisSettings,
    rng: &mut Stream,
) -> Result<(Vec<SpinConfig>, RunStats), XxzError> {
    params.validate()?;
    settings.validate()?;
    let n = params.n;
    let mut config = SpinConfig {
        s: vec![params.m_total / n as f64; n],
        phi: (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
    };
    let mut configs = Vec::with_capacity(settings.n_samples);
    let mut accepted = 0usize;
    let mut min_energy = f64::INFINITY;
    let mut energy_sum = 0.0;
    // Energy is tracked incrementally from accepted deltas and resynced at
    // every emission so rounding drift cannot accumulate.
    let mut e_current = energy(&config, params);
    let total_steps = settings.tau_therm + settings.n_samples * settings.tau_sweep;

    for i in 1..=total_steps {
        if let Some(delta_e) = step(&mut config, params, settings, rng) {
            accepted += 1;
            e_current += delta_e;
        }
        if i >= settings.tau_therm {
            if e_current < min_energy {
                min_energy = e_current;
            }
            if i > settings.tau_therm && (i - settings.tau_therm) % settings.tau_sweep == 0 {
                e_current = energy(&config, params);
                energy_sum += e_current;
                configs.push(config.clone());
                if configs.len() == settings.n_samples {
                    break;
                }
            }
        }
    }
    let stats = RunStats {
        steps: total_steps,
        accepted,
        min_energy,
        mean_sampled_energy: energy_sum / configs.len() as f64,
    };
    Ok((configs, stats))
}

/// One Metropolis step; `Some(δE)` if the move was accepted, `None` if not.
fn step(
    config: &mut SpinConfig,
    params: &XxzParams,
    settings: &MetropolisSettings,
    rng: &mut Stream,
) -> Option<f64> {
    let n = config.s.len();
    let j = rng.random_range(0..n);
    let mut k = rng.random_range(0..n - 1);
    if k >= j {
        k += 1;
    }
    let dphi_j = rng.random_range(-settings.delta_phi..settings.delta_phi);
    let dphi_k = rng.random_range(-settings.delta_phi..settings.delta_phi);
    let ds = rng.random_range(-settings.delta_s..settings.delta_s);

    let new_sj = config.s[j] + ds;
    let new_sk = config.s[k] - ds;
    if new_sj.abs() > 1.0 || new_sk.abs() > 1.0 {
        return None;
    }

    let (bonds, n_bonds) = affected_bonds(n, j, k);
    let before: f64 = bonds[..n_bonds].iter().map(|&b| bond_energy(config, params, b)).sum();

    let old = (config.s[j], config.s[k], config.phi[j], config.phi[k]);
    config.s[j] = new_sj;
    config.s[k] = new_sk;
    config.phi[j] = (config.phi[j] + dphi_j).rem_euclid(TAU);
    config.phi[k] = (config.phi[k] + dphi_k).rem_euclid(TAU);

    let after: f64 = bonds[..n_bonds].iter().map(|&b| bond_energy(config, params, b)).sum();
    let delta_e = after - before;
    if delta_e < 0.0 || rng.random::<f64>() < (-params.beta * delta_e).exp() {
        Some(delta_e)
    } else {
        config.s[j] = old.0;
        config.s[k] = old.1;
        config.phi[j] = old.2;
        config.phi[k] = old.3;
        None
    }
}

/// Default phase-accumulation coupling: θ_j = π s_j maps s ∈ [−1,1] onto a
/// full [−π, π] window.
pub const DEFAULT_COUPLING: f64 = std::f64::consts::PI;

/// θ_j = coupling · s_j.
pub fn spins_to_phases(config: &SpinConfig, coupling: f64) -> Vec<f64> {
    config.s.iter().map(|s| coupling * s).collect()
}

/// A Gibbs ensemble materialized as a pool of sensing-phase vectors.
///
/// Metropolis chains are inherently sequential, so drawing a fresh
/// equilibrated θ per shot would be absurdly expensive. Instead the
/// constructor runs `n_chains` independent chains in parallel (stream index =
/// chain index under `seed`), converts every emitted configuration to phases,
/// and sampling resamples the pool with replacement. Pool size is
/// `settings.n_samples`, split evenly across chains.
#[derive(Debug, Clone)]
pub struct XxzGibbsSpec {
    params: XxzParams,
    coupling: f64,
    pool: Arc<Vec<Vec<f64>>>,
}

impl XxzGibbsSpec {
    pub fn build(
        params: XxzParams,
        settings: &MetropolisSettings,
        coupling: f64,
        n_chains: usize,
        seed: u64,
    ) -> Result<Self, XxzError> {
        params.validate()?;
        settings.validate()?;
        if n_chains == 0 {
            return Err(XxzError::BadSetting("n_chains"));
        }
        let per_chain = MetropolisSettings {
            n_samples: settings.n_samples.div_ceil(n_chains),
            ..*settings
        };
        let chains: Vec<Vec<Vec<f64>>> = (0..n_chains)
            .into_par_iter()
            .map(|c| {
                let mut stream = rng::stream(seed, c as u64);
                let configs = metropolis_sample(&params, &per_chain, &mut stream)?;
                Ok(configs.iter().map(|cfg| spins_to_phases(cfg, coupling)).collect())
            })
            .collect::<Result<_, XxzError>>()?;
        let pool: Vec<Vec<f64>> = chains.into_iter().flatten().collect();
        Ok(Self { params, coupling, pool: Arc::new(pool) })
    }

    pub fn params(&self) -> &XxzParams {
        &self.params
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn n_params(&self) -> usize {
        self.params.n
    }

    pub fn pool(&self) -> &[Vec<f64>] {
        &self.pool
    }

    /// One θ vector, resampled from the pool with replacement.
    pub fn draw(&self, rng: &mut Stream) -> Vec<f64> {
        self.pool[rng.random_range(0..self.pool.len())].clone()
    }
}
