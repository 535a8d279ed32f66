//! Parameter-vector distributions: samplers and characteristic functions.
//!
//! The characteristic function follows the e^{−ik·θ} Fourier convention
//! throughout: χ(k) = E[exp(−i k·θ)]. Every analytic form below is written in
//! that convention and cross-checked against [`characteristic_function_mc`];
//! callers that only consume |χ| or χ differences are insensitive to the
//! choice, but relative phases matter, so it is fixed here once.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::Stream;
use crate::xxz::XxzGibbsSpec;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("covariance is not PSD: |sigma_corr2| = {sigma_corr2} exceeds sigma2 = {sigma2}")]
    NotPsd { sigma2: f64, sigma_corr2: f64 },
    #[error("variance must be nonnegative and finite, got {0}")]
    BadVariance(f64),
    #[error("constrained uniform needs at least one parameter")]
    NoParameters,
    #[error("alpha has length {got}, expected {expected}")]
    AlphaLength { got: usize, expected: usize },
    #[error("alpha weights must lie in [-1, 1] with a nonzero last entry")]
    BadAlpha,
    #[error("marginal interval width must be positive and finite, got {0}")]
    BadInterval(f64),
    #[error("k has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("distribution has no closed-form characteristic function; use the Monte Carlo estimator")]
    NoAnalyticChi,
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

// ---------------------------------------------------------------------------
// Correlated Gaussian pair
// ---------------------------------------------------------------------------

/// Bivariate Gaussian with equal marginal variances:
/// Σ = [[σ², σ_corr²], [σ_corr², σ²]]. The antisymmetric combination
/// (θ₁−θ₂)/√2 has variance σ₋² = σ² − σ_corr², the symmetric one σ₊².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedGaussianSpec {
    mean: [f64; 2],
    sigma2: f64,
    sigma_corr2: f64,
}

impl CorrelatedGaussianSpec {
    pub fn new(mean: [f64; 2], sigma2: f64, sigma_corr2: f64) -> Result<Self, DistributionError> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(DistributionError::BadVariance(sigma2));
        }
        if sigma_corr2.abs() > sigma2 {
            return Err(DistributionError::NotPsd { sigma2, sigma_corr2 });
        }
        Ok(Self { mean, sigma2, sigma_corr2 })
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma_corr2(&self) -> f64 {
        self.sigma_corr2
    }

    pub fn sigma_plus2(&self) -> f64 {
        self.sigma2 + self.sigma_corr2
    }

    pub fn sigma_minus2(&self) -> f64 {
        self.sigma2 - self.sigma_corr2
    }

    fn sample(&self, rng: &mut Stream) -> Vec<f64> {
        if self.sigma2 == 0.0 {
            return self.mean.to_vec();
        }
        // Cholesky factor of Σ; PSD is guaranteed by the constructor.
        let l11 = self.sigma2.sqrt();
        let l21 = self.sigma_corr2 / l11;
        let l22 = (self.sigma2 - l21 * l21).max(0.0).sqrt();
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        vec![self.mean[0] + l11 * z1, self.mean[1] + l21 * z1 + l22 * z2]
    }

    fn chi(&self, k: &[f64]) -> Complex64 {
        let quad = self.sigma2 * (k[0] * k[0] + k[1] * k[1]) + 2.0 * self.sigma_corr2 * k[0] * k[1];
        let phase = -(k[0] * self.mean[0] + k[1] * self.mean[1]);
        Complex64::from_polar((-0.5 * quad).exp(), phase)
    }
}

// ---------------------------------------------------------------------------
// Linearly constrained uniform
// ---------------------------------------------------------------------------

/// θ₁..θ_{n−1} uniform on a marginal interval; θ_n fixed by the linear
/// constraint Σ α_j θ_j = C, optionally relaxed by Gaussian noise on C.
/// θ_n is deliberately not wrapped back into the interval: wrapping is a
/// no-op for any 2π-periodic phase encoding and would break the exact
/// constraint check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedUniformSpec {
    n: usize,
    alpha: Vec<f64>,
    constraint_c: f64,
    noise_sigma: f64,
    interval_start: f64,
    interval_width: f64,
}

impl ConstrainedUniformSpec {
    pub fn new(
        alpha: Vec<f64>,
        constraint_c: f64,
        noise_sigma: f64,
        interval_start: f64,
        interval_width: f64,
    ) -> Result<Self, DistributionError> {
        let n = alpha.len();
        if n == 0 {
            return Err(DistributionError::NoParameters);
        }
        if alpha.iter().any(|a| !a.is_finite() || a.abs() > 1.0) || alpha[n - 1] == 0.0 {
            return Err(DistributionError::BadAlpha);
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(DistributionError::BadVariance(noise_sigma));
        }
        if !(interval_width > 0.0 && interval_width.is_finite()) {
            return Err(DistributionError::BadInterval(interval_width));
        }
        Ok(Self { n, alpha, constraint_c, noise_sigma, interval_start, interval_width })
    }

    /// All-ones weights, exact constraint Σθ = C, marginals on [0, 2π).
    pub fn sum_constrained(n: usize, constraint_c: f64) -> Result<Self, DistributionError> {
        Self::new(vec![1.0; n], constraint_c, 0.0, 0.0, std::f64::consts::TAU)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn constraint_c(&self) -> f64 {
        self.constraint_c
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// (start, width) of the free-parameter marginal interval.
    pub fn interval(&self) -> (f64, f64) {
        (self.interval_start, self.interval_width)
    }

    /// Extends `free` (length n−1) with the constraint-determined last
    /// parameter. Noise-free.
    pub fn complete(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.n - 1, "need n-1 free parameters");
        let mut theta = free.to_vec();
        let partial: f64 = free.iter().zip(&self.alpha).map(|(t, a)| t * a).sum();
        theta.push((self.constraint_c - partial) / self.alpha[self.n - 1]);
        theta
    }

    fn sample(&self, rng: &mut Stream) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.n);
        let mut partial = 0.0;
        for j in 0..self.n - 1 {
            let t = rng.random_range(self.interval_start..self.interval_start + self.interval_width);
            partial += self.alpha[j] * t;
            theta.push(t);
        }
        let mut c = self.constraint_c;
        if self.noise_sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            c += self.noise_sigma * z;
        }
        theta.push((c - partial) / self.alpha[self.n - 1]);
        theta
    }

    fn chi(&self, k: &[f64]) -> Complex64 {
        let a_n = self.alpha[self.n - 1];
        let k_n = k[self.n - 1];
        let mid = self.interval_start + 0.5 * self.interval_width;
        let mut chi = Complex64::from_polar(1.0, -k_n * self.constraint_c / a_n);
        for j in 0..self.n - 1 {
            let omega = k[j] - k_n * self.alpha[j] / a_n;
            chi *= Complex64::from_polar(1.0, -omega * mid) * sinc(0.5 * omega * self.interval_width);
        }
        if self.noise_sigma > 0.0 {
            let scaled = k_n * self.noise_sigma / a_n;
            chi *= (-0.5 * scaled * scaled).exp();
        }
        chi
    }
}

// ---------------------------------------------------------------------------
// Tagged union
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum DistributionSpec {
    CorrelatedGaussian(CorrelatedGaussianSpec),
    ConstrainedUniform(ConstrainedUniformSpec),
    XxzGibbs(XxzGibbsSpec),
    PointMass(Vec<f64>),
}

impl DistributionSpec {
    /// Parameter-vector length.
    pub fn dim(&self) -> usize {
        match self {
            Self::CorrelatedGaussian(_) => 2,
            Self::ConstrainedUniform(s) => s.n(),
            Self::XxzGibbs(s) => s.n_params(),
            Self::PointMass(theta) => theta.len(),
        }
    }
}

/// One θ draw.
pub fn sample(spec: &DistributionSpec, rng: &mut Stream) -> Vec<f64> {
    match spec {
        DistributionSpec::CorrelatedGaussian(s) => s.sample(rng),
        DistributionSpec::ConstrainedUniform(s) => s.sample(rng),
        DistributionSpec::XxzGibbs(s) => s.draw(rng),
        DistributionSpec::PointMass(theta) => theta.clone(),
    }
}

/// Analytic χ(k) = E[e^{−ik·θ}]. Gibbs ensembles have no closed form and
/// report [`DistributionError::NoAnalyticChi`].
pub fn characteristic_function(
    spec: &DistributionSpec,
    k: &[f64],
) -> Result<Complex64, DistributionError> {
    let expected = spec.dim();
    if k.len() != expected {
        return Err(DistributionError::DimensionMismatch { got: k.len(), expected });
    }
    match spec {
        DistributionSpec::CorrelatedGaussian(s) => Ok(s.chi(k)),
        DistributionSpec::ConstrainedUniform(s) => Ok(s.chi(k)),
        DistributionSpec::XxzGibbs(_) => Err(DistributionError::NoAnalyticChi),
        DistributionSpec::PointMass(theta) => {
            let phase: f64 = k.iter().zip(theta).map(|(ki, ti)| ki * ti).sum();
            Ok(Complex64::from_polar(1.0, -phase))
        }
    }
}

/// Monte Carlo estimate of χ(k) with per-component standard errors.
#[derive(Debug, Clone, Copy)]
pub struct McChi {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

pub fn characteristic_function_mc_detailed(
    spec: &DistributionSpec,
    k: &[f64],
    n_samples: usize,
    rng: &mut Stream,
) -> McChi {
    assert!(n_samples >= 1, "need at least one sample");
    let mut sum = Complex64::ZERO;
    let mut sum_sq_re = 0.0;
    let mut sum_sq_im = 0.0;
    for _ in 0..n_samples {
        let theta = sample(spec, rng);
        let phase: f64 = k.iter().zip(&theta).map(|(ki, ti)| ki * ti).sum();
        let z = Complex64::from_polar(1.0, -phase);
        sum += z;
        sum_sq_re += z.re * z.re;
        sum_sq_im += z.im * z.im;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var_re = (sum_sq_re / n - mean.re * mean.re).max(0.0);
    let var_im = (sum_sq_im / n - mean.im * mean.im).max(0.0);
    McChi {
        value: mean,
        stderr_re: (var_re / n).sqrt(),
        stderr_im: (var_im / n).sqrt(),
    }
}

/// Monte Carlo estimate of χ(k).
pub fn characteristic_function_mc(
    spec: &DistributionSpec,
    k: &[f64],
    n_samples: usize,
    rng: &mut Stream,
) -> Complex64 {
    characteristic_function_mc_detailed(spec, k, n_samples, rng).value
}
