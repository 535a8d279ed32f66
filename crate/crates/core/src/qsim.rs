//! Dense state-vector simulation of small qubit registers.
//!
//! This is not a general gate-model simulator. It provides exactly what the
//! sensing protocols need: probe preparation, diagonal phase encoding
//! (`exp(-i q(a)·θ)` with a configurable eigenvalue map), a small set of
//! decoding circuits, computational-basis outcome probabilities with
//! marginalization, Pauli-string generators for quadratically constrained
//! parameters, and input-averaged density matrices.
//!
//! Conventions, used consistently everywhere:
//!
//! * Qubit 0 is the **most significant** bit of a basis index:
//!   `index = Σ_j b_j · 2^(n-1-j)`. So on two qubits `|01⟩` is index 1 and
//!   `|10⟩` is index 2.
//! * The excited state `|1⟩` is the +1 eigenstate of the encoding generator;
//!   phase encoding multiplies the amplitude of basis state `a` by
//!   `exp(-i q(a)·θ)` where `q(a)` is the eigenvalue map (integer bit values
//!   for [`EigenvalueMap::LocalZ`]). The *halved* convention (generator
//!   eigenvalues ±1/2 instead of {0,1}) differs from this by the global
//!   register phase `exp(+i Σθ/2)`; [`apply_phase_halved`] provides it, and
//!   every observable agrees between the two (asserted in tests, not assumed).

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on dense register size (2^14 amplitudes ≈ 256 KiB).
pub const MAX_DENSE_QUBITS: usize = 14;

/// Norm / hermiticity / trace tolerance for state and density validation.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("register must have at least one qubit")]
    ZeroQubits,
    #[error("{0} qubits exceeds the dense-simulation cap of {MAX_DENSE_QUBITS}")]
    TooManyQubits(usize),
    #[error("amplitude vector has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("state is not normalized: |norm² − 1| = {0:.3e}")]
    NotNormalized(f64),
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamMismatch { got: usize, expected: usize },
    #[error("measured-qubit set must be nonempty, in range, and duplicate-free")]
    BadMeasuredSet,
    #[error("decoder expects {expected} qubits, state has {got}")]
    DecoderMismatch { got: usize, expected: usize },
    #[error("variable count must be a positive even number, got {0}")]
    OddVariableCount(usize),
    #[error("density matrix violates {what}: residual {residual:.3e}")]
    InvalidDensity { what: &'static str, residual: f64 },
    #[error("averaging a spin-chain Gibbs distribution needs a random stream")]
    MissingRandomStream,
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Pure state on `n_qubits` qubits; invariant: `amps.len() == 2^n_qubits`,
/// unit norm within [`STATE_TOL`].
#[derive(Debug, Clone)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Validates length and normalization.
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, QsimError> {
        check_qubit_count(n_qubits)?;
        let expected = 1usize << n_qubits;
        if amps.len() != expected {
            return Err(QsimError::BadLength { got: amps.len(), expected });
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(QsimError::NotNormalized((norm2 - 1.0).abs()));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, QsimError> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![Complex64::ZERO; dim];
        amps[index] = Complex64::ONE;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability of each full basis outcome.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Bit of `index` for `qubit` (qubit 0 = most significant).
    #[inline]
    pub fn bit_of(index: usize, qubit: usize, n_qubits: usize) -> usize {
        (index >> (n_qubits - 1 - qubit)) & 1
    }
}

fn check_qubit_count(n: usize) -> Result<(), QsimError> {
    if n == 0 {
        return Err(QsimError::ZeroQubits);
    }
    if n > MAX_DENSE_QUBITS {
        return Err(QsimError::TooManyQubits(n));
    }
    Ok(())
}

/// Mixed state; invariants (checked by [`DensityMatrix::validate`]): Hermitian
/// and unit trace within [`STATE_TOL`], eigenvalues ≥ −1e-10.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.dim();
        let entries = DMatrix::from_fn(dim, dim, |r, c| state.amps[r] * state.amps[c].conj());
        Self { n_qubits: state.n_qubits, entries }
    }

    pub fn from_entries(n_qubits: usize, entries: DMatrix<Complex64>) -> Result<Self, QsimError> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(QsimError::BadLength { got: entries.nrows(), expected: dim });
        }
        Ok(Self { n_qubits, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Hermiticity, trace, and positivity checks.
    pub fn validate(&self) -> Result<(), QsimError> {
        let m = &self.entries;
        let mut herm_residual: f64 = 0.0;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                herm_residual = herm_residual.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        if herm_residual > STATE_TOL {
            return Err(QsimError::InvalidDensity { what: "hermiticity", residual: herm_residual });
        }
        let trace: Complex64 = (0..m.nrows()).map(|i| m[(i, i)]).sum();
        let trace_residual = (trace - Complex64::ONE).norm();
        if trace_residual > STATE_TOL {
            return Err(QsimError::InvalidDensity { what: "unit trace", residual: trace_residual });
        }
        let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(QsimError::InvalidDensity { what: "positivity", residual: -min_eig });
        }
        Ok(())
    }

    /// `Re Tr[ρ O]` for a Hermitian observable `O`.
    pub fn expectation(&self, observable: &DMatrix<Complex64>) -> f64 {
        let dim = self.entries.nrows();
        let mut acc = Complex64::ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += self.entries[(r, c)] * observable[(c, r)];
            }
        }
        acc.re
    }
}

// ---------------------------------------------------------------------------
// Probe preparation
// ---------------------------------------------------------------------------

/// Bloch angles of a single qubit: `cos(polar/2)|0⟩ + e^(i azimuth) sin(polar/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub polar: f64,
    pub azimuth: f64,
}

impl BlochAngles {
    pub fn amplitudes(&self) -> [Complex64; 2] {
        let half = 0.5 * self.polar;
        [
            Complex64::new(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), self.azimuth),
        ]
    }
}

/// Probe families used by the sensing protocols.
#[derive(Debug, Clone)]
pub enum ProbeKind {
    /// Product state with per-qubit Bloch angles.
    Product(Vec<BlochAngles>),
    /// `(|01⟩ + |10⟩)/√2` on two qubits.
    Bell,
    /// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
    Ghz(usize),
    /// Arbitrary normalized amplitudes.
    Custom(Vec<Complex64>),
}

pub fn prepare_probe(kind: &ProbeKind) -> Result<StateVector, QsimError> {
    match kind {
        ProbeKind::Product(angles) => {
            check_qubit_count(angles.len())?;
            let mut amps = vec![Complex64::ONE];
            for a in angles {
                let [a0, a1] = a.amplitudes();
                let mut next = Vec::with_capacity(amps.len() * 2);
                for v in &amps {
                    next.push(v * a0);
                    next.push(v * a1);
                }
                amps = next;
            }
            StateVector::new(angles.len(), amps)
        }
        ProbeKind::Bell => {
            let inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let mut amps = vec![Complex64::ZERO; 4];
            amps[1] = inv;
            amps[2] = inv;
            StateVector::new(2, amps)
        }
        ProbeKind::Ghz(n) => {
            check_qubit_count(*n)?;
            let inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let mut amps = vec![Complex64::ZERO; 1 << n];
            amps[0] = inv;
            amps[(1 << n) - 1] = inv;
            StateVector::new(*n, amps)
        }
        ProbeKind::Custom(amps) => {
            if amps.is_empty() || !amps.len().is_power_of_two() {
                return Err(QsimError::BadLength {
                    got: amps.len(),
                    expected: amps.len().next_power_of_two().max(2),
                });
            }
            StateVector::new(amps.len().trailing_zeros() as usize, amps.clone())
        }
    }
}

// ---------------------------------------------------------------------------
// Phase encoding
// ---------------------------------------------------------------------------

/// Map from a basis index to the vector of frequency multipliers `q(a)` that
/// multiply each parameter in the encoding phase `exp(-i q(a)·θ)`.
#[derive(Debug, Clone)]
pub enum EigenvalueMap {
    /// One parameter per qubit, `q(a) = bits(a)`.
    LocalZ { n_qubits: usize },
    /// One parameter per qubit with per-qubit weights, `q(a)_j = α_j b_j`.
    ScaledLocalZ { alpha: Vec<f64> },
    /// Two qubits, two parameters: `q(a) = (b₀·b₁, b₁)` — the first parameter
    /// couples to the *product* of the bits (a two-body generator), the
    /// second to qubit 1 alone.
    EntanglingZz,
    /// Several qubits sense the same parameter: `q(a)_p = Σ_{j ∈ groups[p]} b_j`.
    /// Every qubit must appear in exactly one group.
    Multicopy { n_qubits: usize, groups: Vec<Vec<usize>> },
}

impl EigenvalueMap {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::LocalZ { n_qubits } => *n_qubits,
            Self::ScaledLocalZ { alpha } => alpha.len(),
            Self::EntanglingZz => 2,
            Self::Multicopy { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Self::LocalZ { n_qubits } => *n_qubits,
            Self::ScaledLocalZ { alpha } => alpha.len(),
            Self::EntanglingZz => 2,
            Self::Multicopy { groups, .. } => groups.len(),
        }
    }

    /// Writes `q(index)` into `out` (length [`Self::n_params`]).
    pub fn q_into(&self, index: usize, out: &mut [f64]) {
        let n = self.n_qubits();
        match self {
            Self::LocalZ { .. } => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = StateVector::bit_of(index, j, n) as f64;
                }
            }
            Self::ScaledLocalZ { alpha } => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = alpha[j] * StateVector::bit_of(index, j, n) as f64;
                }
            }
            Self::EntanglingZz => {
                let b0 = StateVector::bit_of(index, 0, 2) as f64;
                let b1 = StateVector::bit_of(index, 1, 2) as f64;
                out[0] = b0 * b1;
                out[1] = b1;
            }
            Self::Multicopy { groups, .. } => {
                for (p, group) in groups.iter().enumerate() {
                    out[p] = group
                        .iter()
                        .map(|&j| StateVector::bit_of(index, j, n))
                        .sum::<usize>() as f64;
                }
            }
        }
    }

    /// Allocating convenience form of [`Self::q_into`].
    pub fn q(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_params()];
        self.q_into(index, &mut out);
        out
    }
}

/// Multiplies the amplitude of basis state `a` by `exp(-i q(a)·θ)`.
pub fn apply_phase_unitary(
    state: &StateVector,
    theta: &[f64],
    map: &EigenvalueMap,
) -> Result<StateVector, QsimError> {
    if map.n_qubits() != state.n_qubits {
        return Err(QsimError::DecoderMismatch { got: state.n_qubits, expected: map.n_qubits() });
    }
    if theta.len() != map.n_params() {
        return Err(QsimError::ParamMismatch { got: theta.len(), expected: map.n_params() });
    }
    let mut q = vec![0.0; map.n_params()];
    let mut amps = state.amps.clone();
    for (a, amp) in amps.iter_mut().enumerate() {
        map.q_into(a, &mut q);
        let phase: f64 = q.iter().zip(theta).map(|(qi, ti)| qi * ti).sum();
        *amp *= Complex64::from_polar(1.0, -phase);
    }
    Ok(StateVector { n_qubits: state.n_qubits, amps })
}

/// Per-qubit phase encoding with generator eigenvalues ∓1/2 on |0⟩/|1⟩
/// (bit `b` picks up `exp(-i (b - 1/2) θ_j)`). Equals [`apply_phase_unitary`]
/// with [`EigenvalueMap::LocalZ`] times the global phase `exp(+i Σθ/2)`.
pub fn apply_phase_halved(state: &StateVector, theta: &[f64]) -> Result<StateVector, QsimError> {
    let mut out = apply_phase_unitary(state, theta, &EigenvalueMap::LocalZ { n_qubits: state.n_qubits })?;
    let global = Complex64::from_polar(1.0, 0.5 * theta.iter().sum::<f64>());
    for amp in &mut out.amps {
        *amp *= global;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

/// Decoding circuits applied before a computational-basis measurement.
///
/// Each is the adjoint of the corresponding probe-preparation circuit, with
/// optional extra single-qubit Z rotations (`diag(1, e^{-iν})`) folded in
/// front — the standard way to shift the sensing operating point at readout.
#[derive(Debug, Clone)]
pub enum Decoder {
    /// Measure in the computational basis as-is.
    Identity,
    /// Per-qubit `Z(ν_j)` followed by a Hadamard on every qubit (the adjoint
    /// of Hadamard-product preparation).
    ProductHadamard { z_offsets: Vec<f64> },
    /// Adjoint of GHZ preparation with a `Z(offset)` on qubit 0 before the
    /// fan-in: on a sensed GHZ state, qubit 0 reads excited with probability
    /// `(1 − cos(Σθ + offset))/2`; `offset = π/2` gives `(1 + sin Σθ)/2`.
    GhzAdjoint { offset: f64 },
    /// Adjoint of Bell preparation, oriented so that with θ = ν = 0 qubit 0
    /// reads excited with certainty: `p₁ = cos²((θ₀−θ₁+ν₀−ν₁)/2)` after
    /// sensing. Z offsets are applied per qubit before the fan-in.
    BellAdjoint { z_offsets: [f64; 2] },
}

impl Decoder {
    fn expected_qubits(&self) -> Option<usize> {
        match self {
            Decoder::Identity | Decoder::GhzAdjoint { .. } => None,
            Decoder::ProductHadamard { z_offsets } => Some(z_offsets.len()),
            Decoder::BellAdjoint { .. } => Some(2),
        }
    }

    fn apply(&self, state: &StateVector) -> StateVector {
        match self {
            Decoder::Identity => state.clone(),
            Decoder::ProductHadamard { z_offsets } => {
                let mut s = state.clone();
                for (q, nu) in z_offsets.iter().enumerate() {
                    apply_phase1(&mut s, q, -nu);
                    apply_hadamard(&mut s, q);
                }
                s
            }
            Decoder::GhzAdjoint { offset } => {
                let mut s = state.clone();
                for target in 1..s.n_qubits {
                    apply_cnot(&mut s, 0, target);
                }
                apply_phase1(&mut s, 0, -offset);
                apply_hadamard(&mut s, 0);
                s
            }
            Decoder::BellAdjoint { z_offsets } => {
                let mut s = state.clone();
                apply_phase1(&mut s, 0, -z_offsets[0]);
                apply_phase1(&mut s, 1, -z_offsets[1]);
                apply_x(&mut s, 1);
                apply_cnot(&mut s, 0, 1);
                apply_hadamard(&mut s, 0);
                apply_x(&mut s, 0);
                s
            }
        }
    }
}

/// Applies `decoder`, measures `measured_qubits` in the computational basis,
/// and returns the probability of each measured bitstring (first listed qubit
/// = most significant bit of the outcome index), marginalizing the rest.
pub fn decode_probs(
    state: &StateVector,
    decoder: &Decoder,
    measured_qubits: &[usize],
) -> Result<Vec<f64>, QsimError> {
    if let Some(expected) = decoder.expected_qubits() {
        if expected != state.n_qubits {
            return Err(QsimError::DecoderMismatch { got: state.n_qubits, expected });
        }
    }
    let n = state.n_qubits;
    if measured_qubits.is_empty()
        || measured_qubits.iter().any(|&q| q >= n)
        || has_duplicates(measured_qubits)
    {
        return Err(QsimError::BadMeasuredSet);
    }
    let decoded = decoder.apply(state);
    let mut probs = vec![0.0; 1 << measured_qubits.len()];
    for (index, amp) in decoded.amps.iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let mut outcome = 0usize;
        for &q in measured_qubits {
            outcome = (outcome << 1) | StateVector::bit_of(index, q, n);
        }
        probs[outcome] += p;
    }
    Ok(probs)
}

fn has_duplicates(xs: &[usize]) -> bool {
    let mut seen = vec![];
    for &x in xs {
        if seen.contains(&x) {
            return true;
        }
        seen.push(x);
    }
    false
}

// Single-qubit / two-qubit gate kernels (qubit 0 = most significant bit).

fn apply_hadamard(state: &mut StateVector, qubit: usize) {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mask = 1usize << (state.n_qubits - 1 - qubit);
    for i in 0..state.amps.len() {
        if i & mask == 0 {
            let a0 = state.amps[i];
            let a1 = state.amps[i | mask];
            state.amps[i] = (a0 + a1) * inv;
            state.amps[i | mask] = (a0 - a1) * inv;
        }
    }
}

/// `diag(1, e^{i phase})` on one qubit.
fn apply_phase1(state: &mut StateVector, qubit: usize, phase: f64) {
    let mask = 1usize << (state.n_qubits - 1 - qubit);
    let ph = Complex64::from_polar(1.0, phase);
    for (i, amp) in state.amps.iter_mut().enumerate() {
        if i & mask != 0 {
            *amp *= ph;
        }
    }
}

fn apply_x(state: &mut StateVector, qubit: usize) {
    let mask = 1usize << (state.n_qubits - 1 - qubit);
    for i in 0..state.amps.len() {
        if i & mask == 0 {
            state.amps.swap(i, i | mask);
        }
    }
}

fn apply_cnot(state: &mut StateVector, control: usize, target: usize) {
    let cmask = 1usize << (state.n_qubits - 1 - control);
    let tmask = 1usize << (state.n_qubits - 1 - target);
    for i in 0..state.amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            state.amps.swap(i, i | tmask);
        }
    }
}

// ---------------------------------------------------------------------------
// Pauli-string generators for quadratically constrained parameters
// ---------------------------------------------------------------------------

/// One single-qubit Pauli axis; strings here never contain Z or I.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
}

/// Assignment of `n_var` parameters to Pauli strings over {X, Y} on
/// `n_qubits` qubits, split into two groups of `n_var/2`.
///
/// Group membership is by Y-count parity (even for the first group, odd for
/// the second), and *within* each group all Y-counts are congruent mod 4.
/// Those two rules make the generator `G(θ) = Σ_j θ_j P_j` square to
/// `[(Σ_first θ)² + (Σ_second θ)²]·I` on `|1…1⟩`: cross-group anticommutators
/// vanish there and same-group ones contribute `+2`. The parity rule alone is
/// not enough — two even-parity strings whose Y-counts differ by 2 pick up a
/// sign — which is why `n_qubits` can exceed `ceil(log2 n_var)`: it is the
/// smallest register whose mod-4 Y-count classes hold `n_var/2` strings per
/// parity.
#[derive(Debug, Clone)]
pub struct PauliStringAssignment {
    n_var: usize,
    n_qubits: usize,
    strings: Vec<Vec<PauliAxis>>,
}

impl PauliStringAssignment {
    pub fn new(n_var: usize) -> Result<Self, QsimError> {
        if n_var == 0 || n_var % 2 != 0 {
            return Err(QsimError::OddVariableCount(n_var));
        }
        let per_group = n_var / 2;
        let mut n_qubits = 1;
        loop {
            if n_qubits > MAX_DENSE_QUBITS {
                return Err(QsimError::TooManyQubits(n_qubits));
            }
            if best_residue(n_qubits, &[0, 2], per_group).is_some()
                && best_residue(n_qubits, &[1, 3], per_group).is_some()
            {
                break;
            }
            n_qubits += 1;
        }
        let even_res = best_residue(n_qubits, &[0, 2], per_group).unwrap();
        let odd_res = best_residue(n_qubits, &[1, 3], per_group).unwrap();
        let mut strings = strings_with_y_residue(n_qubits, even_res, per_group);
        strings.extend(strings_with_y_residue(n_qubits, odd_res, per_group));
        Ok(Self { n_var, n_qubits, strings })
    }

    pub fn n_var(&self) -> usize {
        self.n_var
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn strings(&self) -> &[Vec<PauliAxis>] {
        &self.strings
    }

    /// Dense matrix of `P_j` (row-major over the register basis).
    pub fn string_matrix(&self, j: usize) -> DMatrix<Complex64> {
        pauli_string_matrix(&self.strings[j])
    }
}

/// First residue in `candidates` whose Y-count class mod 4 holds at least
/// `needed` strings of length `n`.
fn best_residue(n: usize, candidates: &[usize], needed: usize) -> Option<usize> {
    candidates.iter().copied().find(|&r| {
        (0..=n)
            .filter(|y| y % 4 == r)
            .map(|y| binomial(n, y))
            .sum::<usize>()
            >= needed
    })
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Lexicographically first `count` strings (X < Y) with Y-count ≡ residue mod 4.
fn strings_with_y_residue(n: usize, residue: usize, count: usize) -> Vec<Vec<PauliAxis>> {
    let mut out = Vec::with_capacity(count);
    for code in 0..(1usize << n) {
        // Bit 0 of `code` is the first position so enumeration order is
        // lexicographic with X < Y.
        let string: Vec<PauliAxis> = (0..n)
            .map(|pos| if code >> pos & 1 == 0 { PauliAxis::X } else { PauliAxis::Y })
            .collect();
        let y_count = string.iter().filter(|a| **a == PauliAxis::Y).count();
        if y_count % 4 == residue {
            out.push(string);
            if out.len() == count {
                break;
            }
        }
    }
    assert_eq!(out.len(), count, "residue class too small for request");
    out
}

fn pauli_string_matrix(string: &[PauliAxis]) -> DMatrix<Complex64> {
    let n = string.len();
    let dim = 1usize << n;
    // P|col⟩ flips every bit; the entry is the product of per-qubit factors.
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let row = col ^ (dim - 1);
        let mut factor = Complex64::ONE;
        for (j, axis) in string.iter().enumerate() {
            let bit = StateVector::bit_of(col, j, n);
            factor *= match axis {
                PauliAxis::X => Complex64::ONE,
                // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩.
                PauliAxis::Y => {
                    if bit == 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    }
                }
            };
        }
        m[(row, col)] = factor;
    }
    m
}

/// `⟨1…1| exp(-i Σ_j θ_j P_j) |1…1⟩` via Hermitian eigendecomposition of the
/// generator. For θ on the constraint surface
/// `(Σ_first θ)² + (Σ_second θ)² = C` the result is `cos(√C)`.
pub fn quadratic_constraint_overlap(
    theta: &[f64],
    assign: &PauliStringAssignment,
) -> Result<Complex64, QsimError> {
    if theta.len() != assign.n_var {
        return Err(QsimError::ParamMismatch { got: theta.len(), expected: assign.n_var });
    }
    let dim = 1usize << assign.n_qubits;
    let mut generator: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    for (j, t) in theta.iter().enumerate() {
        generator += assign.string_matrix(j) * Complex64::new(*t, 0.0);
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(generator);
    let ones = dim - 1;
    let mut overlap = Complex64::ZERO;
    for k in 0..dim {
        let component = eig.eigenvectors[(ones, k)];
        overlap += Complex64::from_polar(1.0, -eig.eigenvalues[k]) * component * component.conj();
    }
    Ok(overlap)
}

// ---------------------------------------------------------------------------
// Input-averaged density matrices
// ---------------------------------------------------------------------------

use crate::distributions::DistributionSpec;
use crate::rng::Stream;

/// Average of `U(θ)|probe⟩⟨probe|U(θ)†` over the parameter distribution.
///
/// For a noiseless two-parameter constrained-uniform distribution (a single
/// free uniform variable) the average is taken over `n_grid` equally spaced
/// grid points — exact whenever the grid outnumbers the largest integer
/// frequency difference the map can produce. Everything else is Monte Carlo
/// over `n_grid` samples from `dist` (the stream is required then).
pub fn averaged_density(
    probe: &StateVector,
    dist: &DistributionSpec,
    map: &EigenvalueMap,
    n_grid: usize,
    rng: Option<&mut Stream>,
) -> Result<DensityMatrix, QsimError> {
    assert!(n_grid >= 1, "n_grid must be positive");
    let dim = probe.dim();
    let mut acc: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    let mut add_outer = |state: &StateVector| {
        for r in 0..dim {
            for c in 0..dim {
                acc[(r, c)] += state.amps[r] * state.amps[c].conj();
            }
        }
    };

    match dist {
        DistributionSpec::PointMass(theta) => {
            let sensed = apply_phase_unitary(probe, theta, map)?;
            return Ok(DensityMatrix::from_pure(&sensed));
        }
        DistributionSpec::ConstrainedUniform(spec)
            if spec.n() == 2 && spec.noise_sigma() == 0.0 =>
        {
            let (start, width) = spec.interval();
            for k in 0..n_grid {
                let u = start + width * (k as f64) / (n_grid as f64);
                let theta = spec.complete(&[u]);
                let sensed = apply_phase_unitary(probe, &theta, map)?;
                add_outer(&sensed);
            }
        }
        _ => {
            let rng = rng.ok_or(QsimError::MissingRandomStream)?;
            for _ in 0..n_grid {
                let theta = crate::distributions::sample(dist, rng);
                let sensed = apply_phase_unitary(probe, &theta, map)?;
                add_outer(&sensed);
            }
        }
    }
    let scale = Complex64::new(1.0 / n_grid as f64, 0.0);
    Ok(DensityMatrix { n_qubits: probe.n_qubits, entries: acc * scale })
}
