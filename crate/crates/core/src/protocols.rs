//! Sensing protocols over stochastic phases.
//!
//! Five protocol families share one interface: per-qubit Ramsey readout
//! (`Product`), the difference-mode Bell readout (`Bell`), the sum-mode GHZ
//! readout (`Ghz`), and two multi-copy constructions (`MulticopySpatial`,
//! `MulticopySequential`). Each exposes exact per-shot outcome probabilities,
//! Monte Carlo input averaging with a relative-change stopping rule, and shot
//! simulation. Closed-form averaged tables for the correlated-Gaussian and
//! sum-constrained tasks live here too; they serve as infinite-shot training
//! tables and as oracles for the Monte Carlo paths.
//!
//! Outcome tables are indexed by measured bitstring with the first measured
//! qubit as the most significant bit, matching [`crate::qsim::decode_probs`].

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::distributions::{self, CorrelatedGaussianSpec, DistributionSpec};
use crate::qsim::{
    apply_phase_halved, apply_phase_unitary, decode_probs, prepare_probe, BlochAngles, Decoder,
    EigenvalueMap, ProbeKind, QsimError, StateVector, MAX_DENSE_QUBITS,
};
use crate::rng::Stream;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("need at least one qubit")]
    ZeroQubits,
    #[error("protocol on {n} qubits exceeds the {max}-qubit cap")]
    TooManyQubits { n: usize, max: usize },
    #[error("offset vector has length {got}, protocol has {expected} qubits")]
    OffsetMismatch { got: usize, expected: usize },
    #[error("theta has length {got}, protocol senses {expected} parameters")]
    ParamMismatch { got: usize, expected: usize },
    #[error("distribution emits {got} parameters, protocol senses {expected}")]
    DistributionMismatch { got: usize, expected: usize },
    #[error("convergence ratio must exceed 1, got {0}")]
    BadConvergenceRatio(f64),
    #[error("batch size and batch cap must be positive")]
    BadBatching,
    #[error("averaging did not converge: {batches} batches, last max change {last_change:.3e}")]
    NoConvergence { batches: usize, last_change: f64 },
    #[error("need at least one shot")]
    ZeroShots,
    #[error("outcome table must be a probability vector summing to 1")]
    BadTable,
    #[error("parameter pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

// ---------------------------------------------------------------------------
// Protocol description
// ---------------------------------------------------------------------------

/// Which probe/readout family a [`Protocol`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    /// Independent per-qubit Ramsey readout; all qubits measured.
    Product,
    /// Bell-pair difference-mode readout; qubit 0 measured.
    Bell,
    /// GHZ sum-mode readout; qubit 0 measured.
    Ghz,
    /// Two parameters sensed once each by two entangled copies in parallel.
    MulticopySpatial,
    /// Two parameters sensed by one pair twice, with a relabeling in between.
    MulticopySequential,
}

/// Global-phase bookkeeping of the sensing unitary. Outcome probabilities are
/// identical under both conventions for every fixed circuit; the choice only
/// affects the explicit circuit path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// Phases `e^{+iθ/2}` on `|0⟩` and `e^{-iθ/2}` on `|1⟩`.
    #[default]
    Halved,
    /// Phase `e^{-iθ}` on `|1⟩` only.
    Integer,
}

/// A sensing protocol: probe family, per-qubit readout offsets ν, measured
/// qubits, and the phase convention used by the circuit realization.
#[derive(Debug, Clone)]
pub struct Protocol {
    kind: ProtocolKind,
    n_qubits: usize,
    nu: Vec<f64>,
    measured_qubits: Vec<usize>,
    phase_convention: PhaseConvention,
}

impl Protocol {
    /// Per-qubit Ramsey protocol; all qubits measured.
    pub fn product(n_qubits: usize, nu: Vec<f64>) -> Result<Self, ProtocolError> {
        check_qubits(n_qubits)?;
        if nu.len() != n_qubits {
            return Err(ProtocolError::OffsetMismatch { got: nu.len(), expected: n_qubits });
        }
        Ok(Self {
            kind: ProtocolKind::Product,
            n_qubits,
            nu,
            measured_qubits: (0..n_qubits).collect(),
            phase_convention: PhaseConvention::default(),
        })
    }

    /// Bell protocol on two qubits; qubit 0 is read out.
    pub fn bell(nu: [f64; 2]) -> Self {
        Self {
            kind: ProtocolKind::Bell,
            n_qubits: 2,
            nu: nu.to_vec(),
            measured_qubits: vec![0],
            phase_convention: PhaseConvention::default(),
        }
    }

    /// GHZ protocol on `n_qubits`; qubit 0 is read out.
    pub fn ghz(n_qubits: usize, nu: Vec<f64>) -> Result<Self, ProtocolError> {
        check_qubits(n_qubits)?;
        if nu.len() != n_qubits {
            return Err(ProtocolError::OffsetMismatch { got: nu.len(), expected: n_qubits });
        }
        Ok(Self {
            kind: ProtocolKind::Ghz,
            n_qubits,
            nu,
            measured_qubits: vec![0],
            phase_convention: PhaseConvention::default(),
        })
    }

    /// Parallel multi-copy protocol (four qubits, two parameters, one binary
    /// projector outcome).
    pub fn multicopy_spatial() -> Self {
        Self {
            kind: ProtocolKind::MulticopySpatial,
            n_qubits: 4,
            nu: vec![],
            measured_qubits: vec![0],
            phase_convention: PhaseConvention::default(),
        }
    }

    /// Sequential multi-copy protocol (one pair sensed twice, one binary
    /// projector outcome).
    pub fn multicopy_sequential() -> Self {
        Self {
            kind: ProtocolKind::MulticopySequential,
            n_qubits: 2,
            nu: vec![],
            measured_qubits: vec![0],
            phase_convention: PhaseConvention::default(),
        }
    }

    pub fn with_phase_convention(mut self, convention: PhaseConvention) -> Self {
        self.phase_convention = convention;
        self
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.measured_qubits
    }

    pub fn phase_convention(&self) -> PhaseConvention {
        self.phase_convention
    }

    /// Length of the sensed parameter vector.
    pub fn n_params(&self) -> usize {
        match self.kind {
            ProtocolKind::MulticopySpatial | ProtocolKind::MulticopySequential => 2,
            _ => self.n_qubits,
        }
    }

    /// Number of entries in this protocol's outcome table.
    pub fn n_outcomes(&self) -> usize {
        1 << self.measured_qubits.len()
    }
}

fn check_qubits(n: usize) -> Result<(), ProtocolError> {
    if n == 0 {
        return Err(ProtocolError::ZeroQubits);
    }
    if n > MAX_DENSE_QUBITS {
        return Err(ProtocolError::TooManyQubits { n, max: MAX_DENSE_QUBITS });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Per-shot outcome probabilities
// ---------------------------------------------------------------------------

/// Exact outcome probabilities for one parameter draw.
///
/// Product: `p(b_j = 1) = cos²((θ_j + ν_j)/2)`, independent across qubits.
/// Bell: qubit 0 excited with probability `cos²((θ_0 − θ_1 + ν_0 − ν_1)/2)`.
/// GHZ: qubit 0 excited with probability `(1 + sin(Σθ + Σν))/2`.
/// Multi-copy kinds are evolved explicitly through the circuit.
pub fn per_shot_probs(protocol: &Protocol, theta: &[f64]) -> Result<Vec<f64>, ProtocolError> {
    check_params(protocol, theta)?;
    match protocol.kind {
        ProtocolKind::Product => {
            let n = protocol.n_qubits;
            let excited: Vec<f64> = theta
                .iter()
                .zip(&protocol.nu)
                .map(|(t, v)| (0.5 * (t + v)).cos().powi(2))
                .collect();
            let mut probs = vec![0.0; 1 << n];
            for (idx, p) in probs.iter_mut().enumerate() {
                *p = excited
                    .iter()
                    .enumerate()
                    .map(|(j, pj)| if (idx >> (n - 1 - j)) & 1 == 1 { *pj } else { 1.0 - *pj })
                    .product();
            }
            Ok(probs)
        }
        ProtocolKind::Bell => {
            let half = 0.5 * (theta[0] - theta[1] + protocol.nu[0] - protocol.nu[1]);
            let p1 = half.cos().powi(2);
            Ok(vec![1.0 - p1, p1])
        }
        ProtocolKind::Ghz => {
            let total: f64 = theta.iter().sum::<f64>() + protocol.nu.iter().sum::<f64>();
            let p1 = 0.5 * (1.0 + total.sin());
            Ok(vec![1.0 - p1, p1])
        }
        ProtocolKind::MulticopySpatial | ProtocolKind::MulticopySequential => {
            multicopy_per_shot(protocol.kind, theta)
        }
    }
}

fn check_params(protocol: &Protocol, theta: &[f64]) -> Result<(), ProtocolError> {
    if theta.len() != protocol.n_params() {
        return Err(ProtocolError::ParamMismatch {
            got: theta.len(),
            expected: protocol.n_params(),
        });
    }
    Ok(())
}

/// Multi-copy outcomes by explicit state evolution; never from a closed form.
fn multicopy_per_shot(kind: ProtocolKind, theta: &[f64]) -> Result<Vec<f64>, ProtocolError> {
    let inv = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let p1 = match kind {
        ProtocolKind::MulticopySpatial => {
            // Probe (|1000⟩ + |0101⟩)/√2; copies (qubits 0,2) sense θ_0 and
            // copies (qubits 1,3) sense θ_1; project onto (|1000⟩ − i|0101⟩)/√2.
            let mut amps = vec![Complex64::ZERO; 16];
            amps[0b1000] = inv;
            amps[0b0101] = inv;
            let probe = StateVector::new(4, amps)?;
            let map = EigenvalueMap::Multicopy { n_qubits: 4, groups: vec![vec![0, 2], vec![1, 3]] };
            let sensed = apply_phase_unitary(&probe, theta, &map)?;
            let amp =
                (sensed.amplitudes()[0b1000] + Complex64::I * sensed.amplitudes()[0b0101]) * inv;
            amp.norm_sqr()
        }
        ProtocolKind::MulticopySequential => {
            // Probe (|01⟩ + |10⟩)/√2 senses both phases, the occupied branch is
            // relabeled |10⟩ → |00⟩ (identity elsewhere), both phases act
            // again, and the projector (|00⟩ − i|01⟩)/√2 is read out.
            let mut amps = vec![Complex64::ZERO; 4];
            amps[0b01] = inv;
            amps[0b10] = inv;
            let probe = StateVector::new(2, amps)?;
            let map = EigenvalueMap::LocalZ { n_qubits: 2 };
            let sensed = apply_phase_unitary(&probe, theta, &map)?;
            let mut amps = sensed.amplitudes().to_vec();
            amps.swap(0b00, 0b10);
            let relabeled = StateVector::new(2, amps)?;
            let sensed = apply_phase_unitary(&relabeled, theta, &map)?;
            let amp = (sensed.amplitudes()[0b00] + Complex64::I * sensed.amplitudes()[0b01]) * inv;
            amp.norm_sqr()
        }
        _ => unreachable!("multicopy_per_shot is only called for multi-copy kinds"),
    };
    Ok(vec![1.0 - p1, p1])
}

/// Outcome probabilities through the explicit circuit realization: probe
/// preparation, phase sensing under the protocol's phase convention, decoding,
/// computational-basis readout. Agrees with [`per_shot_probs`] to float
/// roundoff and is kept as the independent reference path.
pub fn circuit_probs(protocol: &Protocol, theta: &[f64]) -> Result<Vec<f64>, ProtocolError> {
    check_params(protocol, theta)?;
    match protocol.kind {
        ProtocolKind::Product => {
            let angles =
                vec![BlochAngles { polar: FRAC_PI_2, azimuth: PI }; protocol.n_qubits];
            let probe = prepare_probe(&ProbeKind::Product(angles))?;
            let sensed = sense(&probe, theta, protocol.phase_convention)?;
            let decoder = Decoder::ProductHadamard { z_offsets: protocol.nu.clone() };
            Ok(decode_probs(&sensed, &decoder, &protocol.measured_qubits)?)
        }
        ProtocolKind::Bell => {
            let probe = prepare_probe(&ProbeKind::Bell)?;
            let sensed = sense(&probe, theta, protocol.phase_convention)?;
            let decoder = Decoder::BellAdjoint { z_offsets: [protocol.nu[0], protocol.nu[1]] };
            Ok(decode_probs(&sensed, &decoder, &protocol.measured_qubits)?)
        }
        ProtocolKind::Ghz => {
            let probe = prepare_probe(&ProbeKind::Ghz(protocol.n_qubits))?;
            // Per-qubit readout offsets commute with the sensing phases, so
            // they fold into the sensed vector; the decoder keeps the fixed
            // π/2 operating point of the sum-mode readout.
            let shifted: Vec<f64> =
                theta.iter().zip(&protocol.nu).map(|(t, v)| t + v).collect();
            let sensed = sense(&probe, &shifted, protocol.phase_convention)?;
            let decoder = Decoder::GhzAdjoint { offset: FRAC_PI_2 };
            Ok(decode_probs(&sensed, &decoder, &protocol.measured_qubits)?)
        }
        ProtocolKind::MulticopySpatial | ProtocolKind::MulticopySequential => {
            multicopy_per_shot(protocol.kind, theta)
        }
    }
}

fn sense(
    probe: &StateVector,
    theta: &[f64],
    convention: PhaseConvention,
) -> Result<StateVector, QsimError> {
    match convention {
        PhaseConvention::Halved => apply_phase_halved(probe, theta),
        PhaseConvention::Integer => {
            apply_phase_unitary(probe, theta, &EigenvalueMap::LocalZ { n_qubits: probe.n_qubits() })
        }
    }
}

// ---------------------------------------------------------------------------
// Input averaging
// ---------------------------------------------------------------------------

/// Stopping parameters for [`averaged_probs`].
#[derive(Debug, Clone, Copy)]
pub struct AveragingSettings {
    /// Declare convergence when (smallest table entry)/(largest cumulative
    /// change after a batch) exceeds this.
    pub convergence_ratio: f64,
    /// Parameter draws per batch.
    pub batch_size: usize,
    /// Hard cap on batches before reporting non-convergence.
    pub max_batches: usize,
}

impl Default for AveragingSettings {
    fn default() -> Self {
        Self { convergence_ratio: 5000.0, batch_size: 10_000, max_batches: 500 }
    }
}

/// Converged input-averaged outcome table with batch statistics.
#[derive(Debug, Clone)]
pub struct AveragedProbs {
    /// Cumulative mean outcome table.
    pub probs: Vec<f64>,
    /// Per-entry standard error across batch means.
    pub stderr: Vec<f64>,
    pub batches: usize,
    pub samples: usize,
}

/// Monte Carlo average of [`per_shot_probs`] over the parameter distribution,
/// batched until the stopping rule fires. Point masses return the exact
/// per-shot table from a single evaluation.
pub fn averaged_probs(
    protocol: &Protocol,
    dist: &DistributionSpec,
    settings: &AveragingSettings,
    rng: &mut Stream,
) -> Result<Vec<f64>, ProtocolError> {
    Ok(averaged_probs_detailed(protocol, dist, settings, rng)?.probs)
}

/// [`averaged_probs`] with per-entry standard errors and batch counts.
pub fn averaged_probs_detailed(
    protocol: &Protocol,
    dist: &DistributionSpec,
    settings: &AveragingSettings,
    rng: &mut Stream,
) -> Result<AveragedProbs, ProtocolError> {
    if !(settings.convergence_ratio > 1.0) {
        return Err(ProtocolError::BadConvergenceRatio(settings.convergence_ratio));
    }
    if settings.batch_size == 0 || settings.max_batches == 0 {
        return Err(ProtocolError::BadBatching);
    }
    check_distribution(protocol, dist)?;

    let k = protocol.n_outcomes();
    if let DistributionSpec::PointMass(theta) = dist {
        let probs = per_shot_probs(protocol, theta)?;
        return Ok(AveragedProbs { probs, stderr: vec![0.0; k], batches: 1, samples: 1 });
    }

    let mut total = vec![0.0; k];
    let mut batch_mean_sum = vec![0.0; k];
    let mut batch_mean_sq = vec![0.0; k];
    let mut previous: Vec<f64> = Vec::new();
    let mut last_change = f64::INFINITY;

    for batch_idx in 1..=settings.max_batches {
        let mut batch = vec![0.0; k];
        for _ in 0..settings.batch_size {
            let theta = distributions::sample(dist, rng);
            let p = per_shot_probs(protocol, &theta)?;
            for (acc, v) in batch.iter_mut().zip(&p) {
                *acc += v;
            }
        }
        let inv_batch = 1.0 / settings.batch_size as f64;
        for ((t, ms), (mq, b)) in total
            .iter_mut()
            .zip(batch_mean_sum.iter_mut())
            .zip(batch_mean_sq.iter_mut().zip(&batch))
        {
            let mean = b * inv_batch;
            *t += b;
            *ms += mean;
            *mq += mean * mean;
        }

        let samples = batch_idx * settings.batch_size;
        let cumulative: Vec<f64> = total.iter().map(|t| t / samples as f64).collect();
        if batch_idx >= 2 {
            let change = cumulative
                .iter()
                .zip(&previous)
                .map(|(c, p)| (c - p).abs())
                .fold(0.0, f64::max);
            last_change = change;
            let min_prob = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
            if change == 0.0 || min_prob / change > settings.convergence_ratio {
                let b = batch_idx as f64;
                let stderr = batch_mean_sum
                    .iter()
                    .zip(&batch_mean_sq)
                    .map(|(s, q)| {
                        let var = (q / b - (s / b) * (s / b)).max(0.0);
                        (var / b).sqrt()
                    })
                    .collect();
                return Ok(AveragedProbs {
                    probs: cumulative,
                    stderr,
                    batches: batch_idx,
                    samples,
                });
            }
        }
        previous = cumulative;
    }
    Err(ProtocolError::NoConvergence { batches: settings.max_batches, last_change })
}

fn check_distribution(protocol: &Protocol, dist: &DistributionSpec) -> Result<(), ProtocolError> {
    if dist.dim() != protocol.n_params() {
        return Err(ProtocolError::DistributionMismatch {
            got: dist.dim(),
            expected: protocol.n_params(),
        });
    }
    Ok(())
}

/// Deterministic average of per-shot tables over an explicit parameter pool.
pub fn pool_averaged_probs(
    protocol: &Protocol,
    pool: &[Vec<f64>],
) -> Result<Vec<f64>, ProtocolError> {
    if pool.is_empty() {
        return Err(ProtocolError::EmptyPool);
    }
    let mut acc = vec![0.0; protocol.n_outcomes()];
    for theta in pool {
        let p = per_shot_probs(protocol, theta)?;
        for (a, v) in acc.iter_mut().zip(&p) {
            *a += v;
        }
    }
    let inv = 1.0 / pool.len() as f64;
    for a in &mut acc {
        *a *= inv;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Shot simulation
// ---------------------------------------------------------------------------

/// Tallied measurement outcomes over a fixed number of shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    counts: Vec<u64>,
    total: u64,
}

impl ShotCounts {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_shots(&self) -> u64 {
        self.total
    }

    /// Normalized outcome frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        let inv = 1.0 / self.total as f64;
        self.counts.iter().map(|&c| c as f64 * inv).collect()
    }
}

/// Draws `shots` shots, each sensing a fresh parameter draw, and tallies the
/// measured outcomes.
pub fn simulate_shots(
    protocol: &Protocol,
    dist: &DistributionSpec,
    shots: u64,
    rng: &mut Stream,
) -> Result<ShotCounts, ProtocolError> {
    if shots == 0 {
        return Err(ProtocolError::ZeroShots);
    }
    check_distribution(protocol, dist)?;
    let mut counts = vec![0u64; protocol.n_outcomes()];
    for _ in 0..shots {
        let theta = distributions::sample(dist, rng);
        let probs = per_shot_probs(protocol, &theta)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut outcome = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = i;
                break;
            }
        }
        counts[outcome] += 1;
    }
    Ok(ShotCounts { counts, total: shots })
}

/// Multinomial draw from a fixed outcome table via a binomial chain.
///
/// Because the parameters are redrawn fresh on every shot, shot outcomes are
/// independent draws from the input-averaged table; sampling the joint counts
/// directly is statistically identical to [`simulate_shots`] at O(table)
/// instead of O(shots) cost.
pub fn sample_counts_from_table(
    table: &[f64],
    shots: u64,
    rng: &mut Stream,
) -> Result<ShotCounts, ProtocolError> {
    if shots == 0 {
        return Err(ProtocolError::ZeroShots);
    }
    let sum: f64 = table.iter().sum();
    if table.is_empty()
        || table.iter().any(|p| !p.is_finite() || *p < -1e-9)
        || (sum - 1.0).abs() > 1e-6
    {
        return Err(ProtocolError::BadTable);
    }
    let mut counts = vec![0u64; table.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (i, &p) in table.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == table.len() - 1 {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p.max(0.0) / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("0 < q < 1").sample(rng)
        };
        counts[i] = draw;
        remaining -= draw;
        mass -= p.max(0.0);
    }
    Ok(ShotCounts { counts, total: shots })
}

// ---------------------------------------------------------------------------
// Closed-form averaged tables: correlated Gaussian pair
// ---------------------------------------------------------------------------

/// Input-averaged outcome table of the two-qubit product protocol under a
/// correlated Gaussian pair, in outcome-index order `[p00, p01, p10, p11]`.
pub fn gaussian_product_table(gauss: &CorrelatedGaussianSpec, nu: [f64; 2]) -> [f64; 4] {
    let [m1, m2] = gauss.mean();
    let a = m1 + nu[0];
    let b = m2 + nu[1];
    let e1 = (-0.5 * gauss.sigma2()).exp();
    let ep = (-gauss.sigma_plus2()).exp();
    let em = (-gauss.sigma_minus2()).exp();
    let pair = ep * (a + b).cos() / 8.0 + em * (a - b).cos() / 8.0;
    let ca = e1 * a.cos() / 4.0;
    let cb = e1 * b.cos() / 4.0;
    [
        0.25 - ca - cb + pair,
        0.25 - ca + cb - pair,
        0.25 + ca - cb - pair,
        0.25 + ca + cb + pair,
    ]
}

/// Per-qubit excited-state probabilities of the same protocol.
pub fn gaussian_product_marginals(gauss: &CorrelatedGaussianSpec, nu: [f64; 2]) -> [f64; 2] {
    let [m1, m2] = gauss.mean();
    let e1 = (-0.5 * gauss.sigma2()).exp();
    [0.5 + 0.5 * e1 * (m1 + nu[0]).cos(), 0.5 + 0.5 * e1 * (m2 + nu[1]).cos()]
}

/// Input-averaged excited probability of the Bell difference-mode readout.
pub fn gaussian_bell_excited(gauss: &CorrelatedGaussianSpec, nu: [f64; 2]) -> f64 {
    let [m1, m2] = gauss.mean();
    let em = (-gauss.sigma_minus2()).exp();
    0.5 + 0.5 * em * (m1 - m2 + nu[0] - nu[1]).cos()
}

/// First two moments of a scalar shot-frequency estimator at a fixed shot
/// count.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorStats {
    pub mean: f64,
    pub variance: f64,
}

/// Excited-qubit frequency of the Bell readout.
pub fn bell_estimator_stats(
    gauss: &CorrelatedGaussianSpec,
    nu: [f64; 2],
    shots: u64,
) -> EstimatorStats {
    let p = gaussian_bell_excited(gauss, nu);
    EstimatorStats { mean: p, variance: p * (1.0 - p) / shots as f64 }
}

/// Joint frequency of the two aligned outcomes (both excited or both ground)
/// of the two-qubit product readout.
pub fn two_qubit_sum_estimator_stats(
    gauss: &CorrelatedGaussianSpec,
    nu: [f64; 2],
    shots: u64,
) -> EstimatorStats {
    let [p00, _, _, p11] = gaussian_product_table(gauss, nu);
    let q = p00 + p11;
    EstimatorStats { mean: q, variance: q * (1.0 - q) / shots as f64 }
}

/// Difference of the two per-qubit excited frequencies taken from the same
/// shots. The variance keeps the exact multinomial cross term; it approaches
/// `1/(4S)` only in the strongly correlated small-angle regime.
pub fn one_qubit_difference_estimator_stats(
    gauss: &CorrelatedGaussianSpec,
    nu: [f64; 2],
    shots: u64,
) -> EstimatorStats {
    let [_, p01, p10, p11] = gaussian_product_table(gauss, nu);
    let p1 = p10 + p11;
    let p2 = p01 + p11;
    let s = shots as f64;
    let variance = (p1 * (1.0 - p1) + p2 * (1.0 - p2) - 2.0 * (p11 - p1 * p2)) / s;
    EstimatorStats { mean: p1 - p2, variance }
}

// ---------------------------------------------------------------------------
// Closed-form averaged tables: sum-constrained uniform phases
// ---------------------------------------------------------------------------

/// Input-averaged outcome table of the n-qubit product protocol when θ is
/// uniform on the hyperplane `Σθ = c`:
/// every entry is `2^{-n}·(1 + parity(b)·cos(c + Σν)/2^{n-1})` with
/// `parity(b) = (-1)^{n - popcount(b)}`. Only the all-qubit correlator
/// survives the averaging; every lower-order term integrates to zero.
pub fn sum_constrained_product_table(
    n: usize,
    constraint_c: f64,
    nu: &[f64],
) -> Result<Vec<f64>, ProtocolError> {
    check_qubits(n)?;
    if nu.len() != n {
        return Err(ProtocolError::OffsetMismatch { got: nu.len(), expected: n });
    }
    let correlator =
        (constraint_c + nu.iter().sum::<f64>()).cos() / 2f64.powi(n as i32 - 1);
    let base = 1.0 / (1u64 << n) as f64;
    Ok((0..1usize << n)
        .map(|idx| {
            let parity = if (n - idx.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
            base * (1.0 + parity * correlator)
        })
        .collect())
}

/// Excited probability of the GHZ readout when `Σθ = c` exactly.
pub fn sum_constrained_ghz_excited(constraint_c: f64, nu_sum: f64) -> f64 {
    0.5 * (1.0 + (constraint_c + nu_sum).sin())
}

/// Readout operating point for the sum-constraint task.
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    /// Decode offset of the GHZ readout (π/2: excited probability
    /// `(1 + sin Σθ)/2`, maximally sensitive near `Σθ = 0`).
    pub ghz_decode_offset: f64,
    /// Per-qubit offsets of the product readout.
    pub product_nu: Vec<f64>,
    /// Whether the last qubit had to be shifted by π/2 off the common axis.
    pub last_qubit_shifted: bool,
}

/// Operating point chooser for the sum-constraint task.
///
/// Every product qubit reads along the axis where its excited probability is
/// `(1 + sin θ_j)/2` (ν_j = −π/2). When the averaged table's first-order
/// sensitivity to the constraint value vanishes there, the last qubit is
/// shifted by π/2. The decision is made numerically from the analytic table's
/// central difference at `c = 0`, not from a qubit-count parity rule.
pub fn ghz_offset_and_product_offsets(n: usize) -> Result<OperatingPoint, ProtocolError> {
    check_qubits(n)?;
    let base = vec![-FRAC_PI_2; n];
    let mut shifted = base.clone();
    shifted[n - 1] += FRAC_PI_2;
    // The live candidate's sensitivity is 2^{-(2n-1)}, the dead one's is
    // roundoff; comparing the two keeps the decision scale-free in n.
    let (product_nu, last_qubit_shifted) =
        if table_sensitivity(n, &base)? >= table_sensitivity(n, &shifted)? {
            (base, false)
        } else {
            (shifted, true)
        };
    Ok(OperatingPoint { ghz_decode_offset: FRAC_PI_2, product_nu, last_qubit_shifted })
}

/// Largest |d p̄(b)/dc| over table entries at c = 0, by central difference.
fn table_sensitivity(n: usize, nu: &[f64]) -> Result<f64, ProtocolError> {
    let eps = 1e-4;
    let hi = sum_constrained_product_table(n, eps, nu)?;
    let lo = sum_constrained_product_table(n, -eps, nu)?;
    Ok(hi
        .iter()
        .zip(&lo)
        .map(|(h, l)| ((h - l) / (2.0 * eps)).abs())
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Multi-copy protocols
// ---------------------------------------------------------------------------

/// Excited probabilities of the two multi-copy protocols at relative phase φ.
#[derive(Debug, Clone, Copy)]
pub struct MulticopyProbs {
    pub spatial: f64,
    pub sequential: f64,
}

/// Evaluates both multi-copy protocols at relative phase φ by explicit state
/// evolution, averaged over the free parameter on an 8-point grid. Both equal
/// `(1 + sin 2φ)/2` and are exactly independent of the free parameter.
pub fn multicopy_protocols(phi: f64) -> Result<MulticopyProbs, ProtocolError> {
    let spatial = Protocol::multicopy_spatial();
    let sequential = Protocol::multicopy_sequential();
    const GRID: usize = 8;
    let mut acc = [0.0; 2];
    for k in 0..GRID {
        let u = 4.0 * PI * k as f64 / GRID as f64;
        let theta = [u, phi + 0.5 * u];
        acc[0] += per_shot_probs(&spatial, &theta)?[1];
        acc[1] += per_shot_probs(&sequential, &theta)?[1];
    }
    Ok(MulticopyProbs { spatial: acc[0] / GRID as f64, sequential: acc[1] / GRID as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_at_zero_reads_all_excited() {
        let p = Protocol::product(2, vec![0.0, 0.0]).unwrap();
        let probs = per_shot_probs(&p, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(probs[0b11], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ghz_quarter_period_reads_excited() {
        let p = Protocol::ghz(3, vec![0.0; 3]).unwrap();
        let probs = per_shot_probs(&p, &[0.2, 0.2, FRAC_PI_2 - 0.4]).unwrap();
        assert_abs_diff_eq!(probs[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bell_half_period_reads_ground() {
        let p = Protocol::bell([0.0, 0.0]);
        let probs = per_shot_probs(&p, &[PI, 0.0]).unwrap();
        assert_abs_diff_eq!(probs[1], 0.0, epsilon = 1e-30);
    }

    #[test]
    fn per_shot_tables_normalize() {
        let protos = [
            Protocol::product(3, vec![0.1, -0.4, 2.0]).unwrap(),
            Protocol::bell([0.3, 1.1]),
            Protocol::ghz(4, vec![0.0, 0.5, -0.2, 0.9]).unwrap(),
            Protocol::multicopy_spatial(),
            Protocol::multicopy_sequential(),
        ];
        for p in &protos {
            let theta: Vec<f64> = (0..p.n_params()).map(|j| 0.7 * j as f64 - 0.3).collect();
            let probs = per_shot_probs(p, &theta).unwrap();
            let sum: f64 = probs.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_forms_match_circuits_in_both_conventions() {
        let theta3 = [0.37, -1.2, 2.4];
        let cases = [
            Protocol::product(3, vec![0.2, -0.7, 1.3]).unwrap(),
            Protocol::ghz(3, vec![0.4, 0.0, -0.9]).unwrap(),
        ];
        for base in cases {
            for convention in [PhaseConvention::Halved, PhaseConvention::Integer] {
                let p = base.clone().with_phase_convention(convention);
                let direct = per_shot_probs(&p, &theta3).unwrap();
                let circuit = circuit_probs(&p, &theta3).unwrap();
                for (d, c) in direct.iter().zip(&circuit) {
                    assert_abs_diff_eq!(d, c, epsilon = 1e-12);
                }
            }
        }
        let bell = Protocol::bell([0.15, -0.6]);
        for convention in [PhaseConvention::Halved, PhaseConvention::Integer] {
            let p = bell.clone().with_phase_convention(convention);
            let direct = per_shot_probs(&p, &[0.9, -0.4]).unwrap();
            let circuit = circuit_probs(&p, &[0.9, -0.4]).unwrap();
            for (d, c) in direct.iter().zip(&circuit) {
                assert_abs_diff_eq!(d, c, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ghz_depends_only_on_parameter_sum() {
        let p = Protocol::ghz(4, vec![0.0; 4]).unwrap();
        let a = per_shot_probs(&p, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = per_shot_probs(&p, &[1.0, -0.5, 0.6, -0.1]).unwrap();
        assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-15);
    }

    #[test]
    fn point_mass_average_is_exactly_per_shot() {
        let p = Protocol::product(2, vec![0.0, FRAC_PI_2]).unwrap();
        let theta = vec![0.35, -0.8];
        let dist = DistributionSpec::PointMass(theta.clone());
        let mut rng = rng::master(7);
        let avg =
            averaged_probs_detailed(&p, &dist, &AveragingSettings::default(), &mut rng).unwrap();
        assert_eq!(avg.probs, per_shot_probs(&p, &theta).unwrap());
        assert_eq!(avg.batches, 1);
    }

    #[test]
    fn gaussian_table_normalizes_and_degenerates_to_per_shot() {
        let gauss = CorrelatedGaussianSpec::new([0.3, -0.7], 0.0, 0.0).unwrap();
        let nu = [0.25, -1.4];
        let table = gaussian_product_table(&gauss, nu);
        assert_abs_diff_eq!(table.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let p = Protocol::product(2, nu.to_vec()).unwrap();
        let direct = per_shot_probs(&p, &[0.3, -0.7]).unwrap();
        for (t, d) in table.iter().zip(&direct) {
            assert_abs_diff_eq!(t, d, epsilon = 1e-12);
        }
    }

    #[test]
    fn sum_constrained_two_qubit_operating_point_table() {
        // ν = (−π/2, 0): the correlator term is sin(c)/2, so the all-excited
        // entry is 1/4 + sin(c)/8.
        let c = 0.3;
        let table = sum_constrained_product_table(2, c, &[-FRAC_PI_2, 0.0]).unwrap();
        assert_abs_diff_eq!(table[0b11], 0.25 + c.sin() / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(table.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn operating_point_shifts_only_when_sensitivity_dies() {
        for (n, expect_shift) in [(2, true), (3, false), (4, true), (5, false), (6, true)] {
            let op = ghz_offset_and_product_offsets(n).unwrap();
            assert_eq!(op.last_qubit_shifted, expect_shift, "n = {n}");
            let sens = table_sensitivity(n, &op.product_nu).unwrap();
            let live = 0.5 / 2f64.powi(2 * n as i32 - 1);
            assert!(sens > live, "chosen point is first-order sensitive, n = {n}");
        }
    }

    #[test]
    fn multicopy_matches_double_phase_law() {
        for k in 0..9 {
            let phi = -1.3 + 0.4 * k as f64;
            let probs = multicopy_protocols(phi).unwrap();
            let expected = 0.5 * (1.0 + (2.0 * phi).sin());
            assert_abs_diff_eq!(probs.spatial, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(probs.sequential, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn shot_simulation_is_deterministic_under_point_mass_certainty() {
        let p = Protocol::product(2, vec![0.0, 0.0]).unwrap();
        let dist = DistributionSpec::PointMass(vec![0.0, 0.0]);
        let mut rng = rng::master(3);
        let counts = simulate_shots(&p, &dist, 100, &mut rng).unwrap();
        assert_eq!(counts.counts(), &[0, 0, 0, 100]);
        assert_eq!(counts.total_shots(), 100);
    }

    #[test]
    fn table_sampler_respects_degenerate_tables() {
        let mut rng = rng::master(11);
        let counts = sample_counts_from_table(&[0.0, 1.0, 0.0], 57, &mut rng).unwrap();
        assert_eq!(counts.counts(), &[0, 57, 0]);
        let sum: u64 = sample_counts_from_table(&[0.2, 0.3, 0.5], 1234, &mut rng)
            .unwrap()
            .counts()
            .iter()
            .sum();
        assert_eq!(sum, 1234);
    }

    #[test]
    fn estimator_variances_recover_quarter_shot_scaling_in_the_correlated_limit() {
        let gauss = CorrelatedGaussianSpec::new([0.0, 0.0], 25.0, 0.999 * 25.0).unwrap();
        let stats = one_qubit_difference_estimator_stats(&gauss, [-FRAC_PI_2, -FRAC_PI_2], 100);
        assert_abs_diff_eq!(stats.variance, 1.0 / (4.0 * 100.0), epsilon = 2e-3);
        let bell = bell_estimator_stats(&gauss, [0.0, FRAC_PI_2], 100);
        assert_abs_diff_eq!(bell.variance, 1.0 / (4.0 * 100.0), epsilon = 2e-3);
    }
}
