//! Feature matrices of distribution pairs and probe/measurement optimization.
//!
//! For two parameter distributions A and B sensed through an eigenvalue map
//! q, the feature matrix `F[a,b] = χ_A(q(a) − q(b)) − χ_B(q(a) − q(b))`
//! collects everything any probe/measurement pair can exploit to tell the
//! distributions apart: the separation of expected outcome probability is
//! `Δ = Σ_{a,b} ρ[a,b]·F[a,b]·O[b,a]`. This module builds F from analytic or
//! empirical characteristic functions, evaluates separations, constructs the
//! optimal two-state probe, searches product probes, and computes the
//! distance-resolved upper bounds on achievable separations.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::distributions::{self, DistributionError, DistributionSpec};
use crate::qsim::{DensityMatrix, EigenvalueMap, QsimError, StateVector};
use crate::rng;

/// Dense feature matrices are capped here (4^10 complex entries).
pub const MAX_FEATURE_QUBITS: usize = 10;
/// Product-probe searches are capped here; beyond this the landscape is too
/// large for the local search to be meaningful.
pub const MAX_SEARCH_QUBITS: usize = 6;
/// 90% two-sided normal quantile used by the shot lower bound.
pub const Z_STAR_90: f64 = 1.28;

#[derive(Debug, Error)]
pub enum FeatmatError {
    #[error("feature matrix on {n} qubits exceeds the {max}-qubit cap")]
    TooManyQubits { n: usize, max: usize },
    #[error("product search on {n} qubits exceeds the {max}-qubit cap")]
    SearchTooLarge { n: usize, max: usize },
    #[error("operand dimensions disagree: {a} vs {b}")]
    ShapeMismatch { a: usize, b: usize },
    #[error("observable is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("observable is not idempotent (residual {0:.3e})")]
    NotProjector(f64),
    #[error("separation has imaginary part {imag:.3e}, beyond 1e-10")]
    ImaginarySeparation { imag: f64 },
    #[error("feature matrix has no nonzero off-diagonal entry")]
    NoDominantPair,
    #[error("distribution pair emits {got} parameters, map expects {expected}")]
    ParamMismatch { got: usize, expected: usize },
    #[error("parameter pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

// ---------------------------------------------------------------------------
// Feature matrix construction
// ---------------------------------------------------------------------------

/// Hermitian, zero-diagonal matrix of characteristic-function differences
/// over basis-state pairs of an eigenvalue map.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
    map: EigenvalueMap,
}

impl FeatureMatrix {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.entries[(a, b)]
    }

    pub fn map(&self) -> &EigenvalueMap {
        &self.map
    }
}

/// Builds the feature matrix entrywise from two characteristic-function
/// handles. Hermiticity is structural (`χ(−k) = conj χ(k)` for any real
/// parameter distribution), so only the upper triangle is evaluated; the
/// diagonal is zero because `χ_A(0) = χ_B(0) = 1`.
pub fn build_feature_matrix(
    chi_a: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    chi_b: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    map: &EigenvalueMap,
) -> Result<FeatureMatrix, FeatmatError> {
    build_fallible(&|k| Ok(chi_a(k)), &|k| Ok(chi_b(k)), map)
}

type FallibleChi<'a> = &'a (dyn Fn(&[f64]) -> Result<Complex64, FeatmatError> + Sync);

fn build_fallible(
    chi_a: FallibleChi,
    chi_b: FallibleChi,
    map: &EigenvalueMap,
) -> Result<FeatureMatrix, FeatmatError> {
    let n = map.n_qubits();
    if n > MAX_FEATURE_QUBITS {
        return Err(FeatmatError::TooManyQubits { n, max: MAX_FEATURE_QUBITS });
    }
    let dim = 1usize << n;
    let q: Vec<Vec<f64>> = (0..dim).map(|a| map.q(a)).collect();
    let rows: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|a| -> Result<Vec<Complex64>, FeatmatError> {
            let mut row = vec![Complex64::ZERO; dim];
            let mut k = vec![0.0; q[a].len()];
            for b in (a + 1)..dim {
                for ((ki, qa), qb) in k.iter_mut().zip(&q[a]).zip(&q[b]) {
                    *ki = qa - qb;
                }
                row[b] = chi_a(&k)? - chi_b(&k)?;
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut entries = DMatrix::zeros(dim, dim);
    for (a, row) in rows.iter().enumerate() {
        for b in (a + 1)..dim {
            entries[(a, b)] = row[b];
            entries[(b, a)] = row[b].conj();
        }
    }
    Ok(FeatureMatrix { n_qubits: n, entries, map: map.clone() })
}

/// Feature matrix from two distributions with analytic characteristic
/// functions.
pub fn feature_matrix_from_specs(
    dist_a: &DistributionSpec,
    dist_b: &DistributionSpec,
    map: &EigenvalueMap,
) -> Result<FeatureMatrix, FeatmatError> {
    for dist in [dist_a, dist_b] {
        if dist.dim() != map.n_params() {
            return Err(FeatmatError::ParamMismatch {
                got: dist.dim(),
                expected: map.n_params(),
            });
        }
    }
    build_fallible(
        &|k| Ok(distributions::characteristic_function(dist_a, k)?),
        &|k| Ok(distributions::characteristic_function(dist_b, k)?),
        map,
    )
}

/// Feature matrix from two empirical parameter pools (for ensembles without
/// an analytic characteristic function). Each distinct frequency vector k is
/// averaged over its pool once and memoized.
pub fn feature_matrix_from_pools(
    pool_a: &[Vec<f64>],
    pool_b: &[Vec<f64>],
    map: &EigenvalueMap,
) -> Result<FeatureMatrix, FeatmatError> {
    if pool_a.is_empty() || pool_b.is_empty() {
        return Err(FeatmatError::EmptyPool);
    }
    let chi_a = PoolChi::new(pool_a);
    let chi_b = PoolChi::new(pool_b);
    build_fallible(&|k| Ok(chi_a.eval(k)), &|k| Ok(chi_b.eval(k)), map)
}

/// Memoized empirical characteristic function `mean_pool e^{−ik·θ}`.
struct PoolChi<'a> {
    pool: &'a [Vec<f64>],
    cache: std::sync::Mutex<HashMap<Vec<u64>, Complex64>>,
}

impl<'a> PoolChi<'a> {
    fn new(pool: &'a [Vec<f64>]) -> Self {
        Self { pool, cache: std::sync::Mutex::new(HashMap::new()) }
    }

    fn eval(&self, k: &[f64]) -> Complex64 {
        let key: Vec<u64> = k.iter().map(|x| x.to_bits()).collect();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let mut acc = Complex64::ZERO;
        for theta in self.pool {
            let phase: f64 = k.iter().zip(theta).map(|(ki, ti)| ki * ti).sum();
            acc += Complex64::new(0.0, -phase).exp();
        }
        let value = acc / self.pool.len() as f64;
        self.cache.lock().unwrap().insert(key, value);
        value
    }
}

// ---------------------------------------------------------------------------
// Separation evaluation
// ---------------------------------------------------------------------------

/// A probe density matrix with a projector observable, validated on entry.
#[derive(Debug, Clone)]
pub struct ProbeObservablePair {
    rho: DensityMatrix,
    observable: DMatrix<Complex64>,
}

impl ProbeObservablePair {
    pub fn new(
        rho: DensityMatrix,
        observable: DMatrix<Complex64>,
    ) -> Result<Self, FeatmatError> {
        rho.validate()?;
        let dim = rho.entries().nrows();
        if observable.nrows() != dim || observable.ncols() != dim {
            return Err(FeatmatError::ShapeMismatch { a: observable.nrows(), b: dim });
        }
        let herm = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| (observable[(r, c)] - observable[(c, r)].conj()).norm())
            .fold(0.0f64, f64::max);
        if herm > 1e-10 {
            return Err(FeatmatError::NotHermitian(herm));
        }
        let idem = (&observable * &observable - &observable)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if idem > 1e-10 {
            return Err(FeatmatError::NotProjector(idem));
        }
        Ok(Self { rho, observable })
    }

    /// Pure probe with a rank-one projector onto a measurement state.
    pub fn from_states(
        probe: &StateVector,
        measurement: &StateVector,
    ) -> Result<Self, FeatmatError> {
        let rho = DensityMatrix::from_pure(probe);
        let m = measurement.amplitudes();
        let dim = m.len();
        let observable = DMatrix::from_fn(dim, dim, |r, c| m[r] * m[c].conj());
        Self::new(rho, observable)
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn observable(&self) -> &DMatrix<Complex64> {
        &self.observable
    }
}

/// Separation of expected outcome probability between the two distributions:
/// `Δ = Σ_{a,b} ρ[a,b]·F[a,b]·O[b,a]`. The sum is real for any valid
/// (ρ, F, O) triple; an imaginary residual beyond 1e-10 is an input error.
pub fn separation_value(
    pair: &ProbeObservablePair,
    f: &FeatureMatrix,
) -> Result<f64, FeatmatError> {
    let dim = f.dim();
    if pair.rho.entries().nrows() != dim {
        return Err(FeatmatError::ShapeMismatch { a: pair.rho.entries().nrows(), b: dim });
    }
    let mut acc = Complex64::ZERO;
    for a in 0..dim {
        for b in 0..dim {
            acc += pair.rho.entries()[(a, b)] * f.entries[(a, b)] * pair.observable[(b, a)];
        }
    }
    if acc.im.abs() > 1e-10 {
        return Err(FeatmatError::ImaginarySeparation { imag: acc.im });
    }
    Ok(acc.re)
}

// ---------------------------------------------------------------------------
// Optimal two-state probe
// ---------------------------------------------------------------------------

/// Result of [`optimal_sparse_pair`]: the basis pair, the realized probe and
/// projector, and the achieved separation `|F[a,b]|/2`.
#[derive(Debug, Clone)]
pub struct SparsePair {
    pub a: usize,
    pub b: usize,
    pub pair: ProbeObservablePair,
    pub separation: f64,
}

/// Optimal probe/measurement supported on the two basis states with the
/// largest feature-matrix magnitude: probe `(|a⟩+|b⟩)/√2`, measurement
/// `(|a⟩+e^{−i·arg F[a,b]}|b⟩)/√2`, separation `|F[a,b]|/2`. Exact magnitude
/// ties resolve to the first pair in row-major order; every tied pair
/// achieves the same separation.
pub fn optimal_sparse_pair(f: &FeatureMatrix) -> Result<SparsePair, FeatmatError> {
    let dim = f.dim();
    let mut best: Option<(usize, usize, f64)> = None;
    for a in 0..dim {
        for b in (a + 1)..dim {
            let mag = f.entries[(a, b)].norm();
            if best.map_or(true, |(_, _, m)| mag > m * (1.0 + 1e-12)) {
                best = Some((a, b, mag));
            }
        }
    }
    let (a, b, mag) = best.filter(|&(_, _, m)| m > 0.0).ok_or(FeatmatError::NoDominantPair)?;

    let inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut probe = vec![Complex64::ZERO; dim];
    probe[a] = inv;
    probe[b] = inv;
    let phase = Complex64::new(0.0, -f.entries[(a, b)].arg()).exp();
    let mut meas = vec![Complex64::ZERO; dim];
    meas[a] = inv;
    meas[b] = inv * phase;
    let pair = ProbeObservablePair::from_states(
        &StateVector::new(f.n_qubits, probe)?,
        &StateVector::new(f.n_qubits, meas)?,
    )?;
    let separation = separation_value(&pair, f)?;
    debug_assert!((separation - 0.5 * mag).abs() < 1e-10);
    Ok(SparsePair { a, b, pair, separation })
}

// ---------------------------------------------------------------------------
// Product-probe search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ProductSearchSettings {
    /// Seeded random starts added to the deterministic coarse-grid starts.
    pub random_starts: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Outer sweep cap per start.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for ProductSearchSettings {
    fn default() -> Self {
        Self { random_starts: 48, initial_step: 0.5, min_step: 1e-4, max_iters: 300, seed: 0 }
    }
}

/// Best product-probe/product-measurement separation found by multi-start
/// local search. The value is a lower bound on the true product optimum;
/// [`theorem_bound_report`]'s product bound gives the matching upper bound.
#[derive(Debug, Clone)]
pub struct ProductSearch {
    pub separation: f64,
    pub pair: ProbeObservablePair,
}

/// Local-search parameters: per qubit, probe Bloch angles (polar, azimuth)
/// followed by measurement-basis angles (polar, azimuth).
fn unpack(params: &[f64], n: usize) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let probe = (0..n).map(|j| [params[4 * j], params[4 * j + 1]]).collect();
    let meas = (0..n).map(|j| [params[4 * j + 2], params[4 * j + 3]]).collect();
    (probe, meas)
}

/// Diagonal of `W† (ρ∘F) W` for the product measurement basis W, via one
/// single-qubit congruence transform per qubit.
fn outcome_weights(f: &FeatureMatrix, params: &[f64]) -> Vec<f64> {
    let n = f.n_qubits;
    let dim = f.dim();
    let (probe, meas) = unpack(params, n);

    // Probe amplitudes v[j][bit].
    let v: Vec<[Complex64; 2]> = probe
        .iter()
        .map(|[polar, azimuth]| {
            let half = 0.5 * polar;
            [
                Complex64::new(half.cos(), 0.0),
                Complex64::new(0.0, *azimuth).exp() * half.sin(),
            ]
        })
        .collect();
    let amp = |idx: usize| -> Complex64 {
        let mut a = Complex64::ONE;
        for (j, vj) in v.iter().enumerate() {
            a *= vj[(idx >> (n - 1 - j)) & 1];
        }
        a
    };
    let mut g = DMatrix::from_fn(dim, dim, |r, c| {
        amp(r) * amp(c).conj() * f.entries[(r, c)]
    });

    // Measurement basis columns w[j][, o]: o = 0 column (w00, w10), o = 1
    // column (w01, w11).
    for (j, [polar, azimuth]) in meas.iter().enumerate() {
        let half = 0.5 * polar;
        let e = Complex64::new(0.0, *azimuth).exp();
        let w00 = Complex64::new(half.cos(), 0.0);
        let w10 = e * half.sin();
        let w01 = -e.conj() * half.sin();
        let w11 = Complex64::new(half.cos(), 0.0);
        let stride = 1usize << (n - 1 - j);
        // Left-multiply by W†: rows mix in pairs.
        for base in 0..dim {
            if base & stride != 0 {
                continue;
            }
            let (r0, r1) = (base, base | stride);
            for c in 0..dim {
                let a = g[(r0, c)];
                let b = g[(r1, c)];
                g[(r0, c)] = w00.conj() * a + w10.conj() * b;
                g[(r1, c)] = w01.conj() * a + w11.conj() * b;
            }
        }
        // Right-multiply by W: columns mix in pairs.
        for base in 0..dim {
            if base & stride != 0 {
                continue;
            }
            let (c0, c1) = (base, base | stride);
            for r in 0..dim {
                let a = g[(r, c0)];
                let b = g[(r, c1)];
                g[(r, c0)] = a * w00 + b * w10;
                g[(r, c1)] = a * w01 + b * w11;
            }
        }
    }
    (0..dim).map(|o| g[(o, o)].re).collect()
}

/// Separation of the best outcome subset for these angles: Σ max(c_o, 0).
/// The subset choice is exactly optimal because outcome contributions are
/// additive and independent.
fn product_objective(f: &FeatureMatrix, params: &[f64]) -> f64 {
    outcome_weights(f, params).iter().map(|c| c.max(0.0)).sum()
}

fn compass_search(
    f: &FeatureMatrix,
    mut params: Vec<f64>,
    settings: &ProductSearchSettings,
) -> (f64, Vec<f64>) {
    let mut best = product_objective(f, &params);
    let mut step = settings.initial_step;
    for _ in 0..settings.max_iters {
        if step < settings.min_step {
            break;
        }
        let mut improved = false;
        for coord in 0..params.len() {
            for dir in [1.0, -1.0] {
                let saved = params[coord];
                params[coord] = saved + dir * step;
                let value = product_objective(f, &params);
                if value > best + 1e-15 {
                    best = value;
                    improved = true;
                } else {
                    params[coord] = saved;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, params)
}

/// Multi-start product-probe search. Deterministic for fixed settings: the
/// coarse-grid starts are fixed and the random starts derive from the seed.
pub fn best_product_separation(
    f: &FeatureMatrix,
    settings: &ProductSearchSettings,
) -> Result<ProductSearch, FeatmatError> {
    let n = f.n_qubits;
    if n > MAX_SEARCH_QUBITS {
        return Err(FeatmatError::SearchTooLarge { n, max: MAX_SEARCH_QUBITS });
    }
    let n_params = 4 * n;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    // Coarse grid: equatorial probes and X-basis measurements, with the probe
    // azimuth pattern varied; equatorial states maximize phase sensitivity.
    let half_pi = std::f64::consts::FRAC_PI_2;
    for pattern in 0..4u32 {
        let mut p = vec![0.0; n_params];
        for j in 0..n {
            p[4 * j] = half_pi;
            p[4 * j + 1] = match pattern {
                0 => 0.0,
                1 => if j == 0 { half_pi } else { 0.0 },
                2 => half_pi * (j % 2) as f64,
                _ => half_pi,
            };
            p[4 * j + 2] = half_pi;
            p[4 * j + 3] = 0.0;
        }
        starts.push(p);
    }
    let mut seed_rng = rng::master(settings.seed);
    for _ in 0..settings.random_starts {
        let p: Vec<f64> = (0..n_params)
            .map(|i| {
                use rand::Rng;
                let range = if i % 2 == 0 { std::f64::consts::PI } else { 2.0 * std::f64::consts::PI };
                seed_rng.random_range(0.0..range)
            })
            .collect();
        starts.push(p);
    }

    let (_, best_params) = starts
        .into_par_iter()
        .map(|start| compass_search(f, start, settings))
        .reduce(
            || (f64::NEG_INFINITY, vec![0.0; n_params]),
            |a, b| if a.0 >= b.0 { a } else { b },
        );

    // Realize the optimum as an explicit (ρ, O) pair and report its exact
    // separation.
    let (probe_angles, meas_angles) = unpack(&best_params, n);
    let dim = f.dim();
    let mut probe_amps = vec![Complex64::ONE; dim];
    for (idx, amp) in probe_amps.iter_mut().enumerate() {
        for (j, [polar, azimuth]) in probe_angles.iter().enumerate() {
            let half = 0.5 * polar;
            *amp *= if (idx >> (n - 1 - j)) & 1 == 1 {
                Complex64::new(0.0, *azimuth).exp() * half.sin()
            } else {
                Complex64::new(half.cos(), 0.0)
            };
        }
    }
    let weights = outcome_weights(f, &best_params);
    let mut observable = DMatrix::<Complex64>::zeros(dim, dim);
    for (o, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        let mut vec_o = vec![Complex64::ONE; dim];
        for (idx, entry) in vec_o.iter_mut().enumerate() {
            for (j, [polar, azimuth]) in meas_angles.iter().enumerate() {
                let half = 0.5 * polar;
                let e = Complex64::new(0.0, *azimuth).exp();
                let bit = (idx >> (n - 1 - j)) & 1;
                let o_bit = (o >> (n - 1 - j)) & 1;
                *entry *= match (bit, o_bit) {
                    (0, 0) => Complex64::new(half.cos(), 0.0),
                    (1, 0) => e * half.sin(),
                    (0, 1) => -e.conj() * half.sin(),
                    _ => Complex64::new(half.cos(), 0.0),
                };
            }
        }
        for r in 0..dim {
            for c in 0..dim {
                observable[(r, c)] += vec_o[r] * vec_o[c].conj();
            }
        }
    }
    let pair = ProbeObservablePair::new(
        DensityMatrix::from_pure(&StateVector::new(n, probe_amps)?),
        observable,
    )?;
    let separation = separation_value(&pair, f)?;
    Ok(ProductSearch { separation, pair })
}

// ---------------------------------------------------------------------------
// Separation bounds
// ---------------------------------------------------------------------------

/// Feature-matrix statistics over ordered basis pairs at one Hamming
/// distance.
#[derive(Debug, Clone, Copy)]
pub struct DistanceBand {
    pub distance: usize,
    pub pair_count: usize,
    /// √(mean |F|²) over the band.
    pub rms: f64,
    /// mean |F| over the band.
    pub mean_abs: f64,
}

/// Distance-resolved upper bounds on achievable separations.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub bands: Vec<DistanceBand>,
    /// Σ_d rms(d)·√C(n,d): upper bound for product probes with product
    /// measurements.
    pub product_probe_bound: f64,
    /// Σ_d C(n,d)·mean_abs(d): upper bound for any probe and measurement.
    pub general_probe_bound: f64,
}

/// Per-Hamming-distance feature statistics and the two separation bounds.
pub fn theorem_bound_report(f: &FeatureMatrix) -> BoundReport {
    let n = f.n_qubits;
    let dim = f.dim();
    let mut sum_sq = vec![0.0; n + 1];
    let mut sum_abs = vec![0.0; n + 1];
    let mut count = vec![0usize; n + 1];
    for a in 0..dim {
        for b in 0..dim {
            if a == b {
                continue;
            }
            let d = (a ^ b).count_ones() as usize;
            let mag = f.entries[(a, b)].norm();
            sum_sq[d] += mag * mag;
            sum_abs[d] += mag;
            count[d] += 1;
        }
    }
    let mut bands = Vec::with_capacity(n);
    let mut product_probe_bound = 0.0;
    let mut general_probe_bound = 0.0;
    for d in 1..=n {
        let c = count[d] as f64;
        let rms = (sum_sq[d] / c).sqrt();
        let mean_abs = sum_abs[d] / c;
        bands.push(DistanceBand { distance: d, pair_count: count[d], rms, mean_abs });
        let choose = binomial(n, d);
        product_probe_bound += rms * choose.sqrt();
        general_probe_bound += choose * mean_abs;
    }
    BoundReport { bands, product_probe_bound, general_probe_bound }
}

/// Shots needed before a separation Δ clears the 90% detection threshold:
/// `z*² / (4Δ²)`.
pub fn shot_lower_bound_90(separation: f64) -> f64 {
    Z_STAR_90 * Z_STAR_90 / (4.0 * separation * separation)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
