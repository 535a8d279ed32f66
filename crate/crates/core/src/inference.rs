//! Classification and estimation on top of shot statistics.
//!
//! A [`ClassModel`] holds the two hypotheses' averaged outcome tables;
//! classifiers score observed frequency vectors against them. Linear
//! estimators are trained by centered minimum-norm least squares on
//! (frequency vector, target) pairs. Sweep drivers measure accuracy or mean
//! squared error against shot count over many independent trials and
//! [`shots_to_target`] reads off the first crossing of a target level.
//!
//! Trials draw shot counts directly from the averaged tables
//! ([`sample_counts_from_table`]): parameters are redrawn fresh on every
//! shot, so outcomes are independent draws from the averaged table and the
//! joint counts are exactly multinomial.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::protocols::{sample_counts_from_table, ProtocolError};
use crate::rng;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("class tables must have equal length of at least 2, got {a} and {b}")]
    TableShape { a: usize, b: usize },
    #[error("class table must be a probability vector: sum {sum} off by more than 1e-10")]
    TableNotNormalized { sum: f64 },
    #[error("class table entries must be finite and non-negative")]
    TableEntry,
    #[error("observation has {got} entries, model has {expected}")]
    ObservationShape { got: usize, expected: usize },
    #[error("observed frequencies must sum to 1 within 1e-9, got {sum}")]
    ObservationNotNormalized { sum: f64 },
    #[error("pooled variance must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error("training needs at least one sample with matching target count")]
    NoTrainingData,
    #[error("training rows must share one dimension")]
    RaggedInputs,
    #[error("input has {got} features, estimator has {expected}")]
    FeatureMismatch { got: usize, expected: usize },
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { got: u64, min: u64 },
    #[error("shots grid must be non-empty and strictly increasing")]
    BadShotsGrid,
    #[error("estimation sweep needs at least one evaluation table")]
    NoEvaluationTables,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Minimum trials per sweep point; below this the stderr bands are
/// meaningless.
pub const MIN_TRIALS: u64 = 100;

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    A,
    B,
}

/// Two-hypothesis model: one averaged outcome table per class.
#[derive(Debug, Clone)]
pub struct ClassModel {
    table_a: Vec<f64>,
    table_b: Vec<f64>,
}

impl ClassModel {
    pub fn new(table_a: Vec<f64>, table_b: Vec<f64>) -> Result<Self, InferenceError> {
        if table_a.len() != table_b.len() || table_a.len() < 2 {
            return Err(InferenceError::TableShape { a: table_a.len(), b: table_b.len() });
        }
        for table in [&table_a, &table_b] {
            if table.iter().any(|p| !p.is_finite() || *p < -1e-12) {
                return Err(InferenceError::TableEntry);
            }
            let sum: f64 = table.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(InferenceError::TableNotNormalized { sum });
            }
        }
        Ok(Self { table_a, table_b })
    }

    pub fn table(&self, label: ClassLabel) -> &[f64] {
        match label {
            ClassLabel::A => &self.table_a,
            ClassLabel::B => &self.table_b,
        }
    }

    pub fn n_outcomes(&self) -> usize {
        self.table_a.len()
    }
}

fn check_observation(observed: &[f64], model: &ClassModel) -> Result<(), InferenceError> {
    if observed.len() != model.n_outcomes() {
        return Err(InferenceError::ObservationShape {
            got: observed.len(),
            expected: model.n_outcomes(),
        });
    }
    let sum: f64 = observed.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(InferenceError::ObservationNotNormalized { sum });
    }
    Ok(())
}

/// Maximum-likelihood classification of an observed frequency vector under
/// the multinomial model, implemented as the nearer centroid in Euclidean
/// distance. Exact ties go to `A`.
pub fn mle_classify(observed: &[f64], model: &ClassModel) -> Result<ClassLabel, InferenceError> {
    check_observation(observed, model)?;
    let dist2 = |table: &[f64]| -> f64 {
        observed.iter().zip(table).map(|(o, t)| (o - t) * (o - t)).sum()
    };
    Ok(if dist2(&model.table_a) <= dist2(&model.table_b) { ClassLabel::A } else { ClassLabel::B })
}

/// Classification by smaller total variation distance to the class table.
/// Exact ties go to `A`.
pub fn tvd_classify(observed: &[f64], model: &ClassModel) -> Result<ClassLabel, InferenceError> {
    check_observation(observed, model)?;
    let tvd = |table: &[f64]| -> f64 {
        0.5 * observed.iter().zip(table).map(|(o, t)| (o - t).abs()).sum::<f64>()
    };
    Ok(if tvd(&model.table_a) <= tvd(&model.table_b) { ClassLabel::A } else { ClassLabel::B })
}

/// Separation of two scalar summaries: squared mean difference over the
/// pooled variance `(var_a + var_b)/2`. Invariant under any shared affine
/// rescaling of the summary.
pub fn fisher_discriminant(
    mean_a: f64,
    var_a: f64,
    mean_b: f64,
    var_b: f64,
) -> Result<f64, InferenceError> {
    let pooled = 0.5 * (var_a + var_b);
    if !(pooled > 0.0) || !pooled.is_finite() {
        return Err(InferenceError::BadVariance(pooled));
    }
    let diff = mean_a - mean_b;
    Ok(diff * diff / pooled)
}

// ---------------------------------------------------------------------------
// Linear estimation
// ---------------------------------------------------------------------------

/// Affine read-out of a frequency vector: `ŷ = w·x + b`.
#[derive(Debug, Clone)]
pub struct LinearEstimator {
    weights: Vec<f64>,
    bias: f64,
    min_norm: bool,
}

impl LinearEstimator {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// True when training was rank deficient and the minimum-norm solution
    /// was selected among the least-squares optima.
    pub fn is_min_norm(&self) -> bool {
        self.min_norm
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, InferenceError> {
        if x.len() != self.weights.len() {
            return Err(InferenceError::FeatureMismatch {
                got: x.len(),
                expected: self.weights.len(),
            });
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }
}

/// Least-squares training of a [`LinearEstimator`] on (input, target) pairs.
///
/// Inputs and targets are centered, the weight vector solves the centered
/// system by SVD (small singular values dropped, so rank-deficient systems
/// get the minimum-norm optimum and duplicated columns split weight evenly),
/// and the bias restores the means. A constant target vector yields zero
/// weights and the constant as bias.
pub fn train_linear_estimator(
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<LinearEstimator, InferenceError> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(InferenceError::NoTrainingData);
    }
    let d = inputs[0].len();
    if d == 0 || inputs.iter().any(|row| row.len() != d) {
        return Err(InferenceError::RaggedInputs);
    }
    let n = inputs.len();
    let y_mean = targets.iter().sum::<f64>() / n as f64;
    if targets.iter().all(|t| (t - y_mean).abs() <= 1e-14 * (1.0 + y_mean.abs())) {
        return Ok(LinearEstimator { weights: vec![0.0; d], bias: y_mean, min_norm: false });
    }

    let mut x_mean = vec![0.0; d];
    for row in inputs {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut x_mean {
        *m /= n as f64;
    }

    let design = DMatrix::from_fn(n, d, |i, j| inputs[i][j] - x_mean[j]);
    let rhs = DVector::from_fn(n, |i, _| targets[i] - y_mean);
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = max_sv * n.max(d) as f64 * f64::EPSILON;
    let (weights, rank) = if max_sv == 0.0 {
        (DVector::zeros(d), 0)
    } else {
        let w = svd.solve(&rhs, eps).expect("SVD of a real matrix always factors");
        (w, svd.rank(eps))
    };
    let bias = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearEstimator { weights: weights.iter().cloned().collect(), bias, min_norm: rank < d })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Fraction of correctly classified trials; higher is better.
    Accuracy,
    /// Mean squared estimation error; lower is better.
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Mle,
    Tvd,
}

/// One (shot count, metric) sample with its trial statistics.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub shots: u64,
    pub metric: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Metric-versus-shots curve, ascending in shots.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub metric: MetricKind,
    pub points: Vec<SweepPoint>,
}

/// Power-of-two shots grid `2^min_exp ..= 2^max_exp`.
pub fn log2_shots_grid(min_exp: u32, max_exp: u32) -> Vec<u64> {
    (min_exp..=max_exp).map(|e| 1u64 << e).collect()
}

/// Default sweep grid: `2^1 ..= 2^22`.
pub fn default_shots_grid() -> Vec<u64> {
    log2_shots_grid(1, 22)
}

fn check_grid(grid: &[u64]) -> Result<(), InferenceError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(InferenceError::BadShotsGrid);
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<(), InferenceError> {
    if trials < MIN_TRIALS {
        return Err(InferenceError::TooFewTrials { got: trials, min: MIN_TRIALS });
    }
    Ok(())
}

/// Classification sweep: balanced trials (even trial indices are class `A`),
/// one derived RNG stream per trial, classification of the observed frequency
/// vector against the model.
#[derive(Debug, Clone)]
pub struct ClassificationSweep<'a> {
    pub model: &'a ClassModel,
    pub classifier: ClassifierKind,
    pub shots_grid: &'a [u64],
    pub trials: u64,
    pub seed: u64,
    /// Base RNG stream index; the sweep consumes
    /// `stream_offset .. stream_offset + shots_grid.len()·trials`.
    pub stream_offset: u64,
}

pub fn run_classification_sweep(
    sweep: &ClassificationSweep,
) -> Result<SweepResult, InferenceError> {
    check_grid(sweep.shots_grid)?;
    check_trials(sweep.trials)?;
    let mut points = Vec::with_capacity(sweep.shots_grid.len());
    for (idx, &shots) in sweep.shots_grid.iter().enumerate() {
        let base = sweep.stream_offset + idx as u64 * sweep.trials;
        let point = classification_point(
            sweep.model,
            sweep.classifier,
            shots,
            sweep.trials,
            sweep.seed,
            base,
        )?;
        points.push(point);
    }
    Ok(SweepResult { metric: MetricKind::Accuracy, points })
}

/// Accuracy of balanced classification trials at one fixed shot count.
pub fn classification_point(
    model: &ClassModel,
    classifier: ClassifierKind,
    shots: u64,
    trials: u64,
    seed: u64,
    stream_offset: u64,
) -> Result<SweepPoint, InferenceError> {
    check_trials(trials)?;
    let correct: u64 = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64, InferenceError> {
            let truth = if t % 2 == 0 { ClassLabel::A } else { ClassLabel::B };
            let mut stream = rng::stream(seed, stream_offset + t);
            let counts = sample_counts_from_table(model.table(truth), shots, &mut stream)?;
            let observed = counts.frequencies();
            let guess = match classifier {
                ClassifierKind::Mle => mle_classify(&observed, model)?,
                ClassifierKind::Tvd => tvd_classify(&observed, model)?,
            };
            Ok(u64::from(guess == truth))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let accuracy = correct as f64 / trials as f64;
    let stderr = (accuracy * (1.0 - accuracy) / trials as f64).sqrt();
    Ok(SweepPoint { shots, metric: accuracy, stderr, trials })
}

/// Estimation sweep: trials cycle deterministically through the evaluation
/// set of (target, averaged table) pairs; the metric is the mean squared
/// error of the estimator's prediction on the observed frequency vector.
#[derive(Debug, Clone)]
pub struct EstimationSweep<'a> {
    pub estimator: &'a LinearEstimator,
    /// Evaluation set: (target value, averaged outcome table).
    pub eval_tables: &'a [(f64, Vec<f64>)],
    pub shots_grid: &'a [u64],
    pub trials: u64,
    pub seed: u64,
    pub stream_offset: u64,
}

pub fn run_estimation_sweep(sweep: &EstimationSweep) -> Result<SweepResult, InferenceError> {
    check_grid(sweep.shots_grid)?;
    check_trials(sweep.trials)?;
    if sweep.eval_tables.is_empty() {
        return Err(InferenceError::NoEvaluationTables);
    }
    let mut points = Vec::with_capacity(sweep.shots_grid.len());
    for (idx, &shots) in sweep.shots_grid.iter().enumerate() {
        let base = sweep.stream_offset + idx as u64 * sweep.trials;
        let squared: Vec<f64> = (0..sweep.trials)
            .into_par_iter()
            .map(|t| -> Result<f64, InferenceError> {
                let (target, table) = &sweep.eval_tables[t as usize % sweep.eval_tables.len()];
                let mut stream = rng::stream(sweep.seed, base + t);
                let counts = sample_counts_from_table(table, shots, &mut stream)?;
                let err = sweep.estimator.predict(&counts.frequencies())? - target;
                Ok(err * err)
            })
            .collect::<Result<_, _>>()?;
        let n = squared.len() as f64;
        let mse = squared.iter().sum::<f64>() / n;
        let var = squared.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / n;
        points.push(SweepPoint { shots, metric: mse, stderr: (var / n).sqrt(), trials: sweep.trials });
    }
    Ok(SweepResult { metric: MetricKind::Mse, points })
}

// ---------------------------------------------------------------------------
// Target crossings
// ---------------------------------------------------------------------------

/// Shots needed to reach a target metric level, from the first grid-bracketed
/// crossing with log2-linear interpolation. `None` means the sweep never
/// reached the level (censored, never extrapolated).
#[derive(Debug, Clone, Copy)]
pub struct ShotsToTarget {
    /// Interpolated crossing of the measured curve.
    pub shots: Option<f64>,
    /// Crossing of the optimistic curve (metric shifted one stderr toward the
    /// target); a lower band edge in shots.
    pub shots_lower: Option<f64>,
    /// Crossing of the pessimistic curve; `None` if that curve stays short.
    pub shots_upper: Option<f64>,
}

/// First crossing of `target` by the sweep curve.
pub fn shots_to_target(sweep: &SweepResult, target: f64) -> ShotsToTarget {
    ShotsToTarget {
        shots: crossing(sweep, target, 0.0),
        shots_lower: crossing(sweep, target, 1.0),
        shots_upper: crossing(sweep, target, -1.0),
    }
}

/// Crossing finder on the score curve (accuracy as-is, MSE negated so both
/// cross upward), with the metric shifted by `shift` standard errors toward
/// the favorable side.
fn crossing(sweep: &SweepResult, target: f64, shift: f64) -> Option<f64> {
    let (scores, goal): (Vec<f64>, f64) = match sweep.metric {
        MetricKind::Accuracy => {
            (sweep.points.iter().map(|p| p.metric + shift * p.stderr).collect(), target)
        }
        MetricKind::Mse => {
            (sweep.points.iter().map(|p| -(p.metric - shift * p.stderr)).collect(), -target)
        }
    };
    if scores.is_empty() {
        return None;
    }
    if scores[0] >= goal {
        return Some(sweep.points[0].shots as f64);
    }
    for i in 1..scores.len() {
        if scores[i] >= goal {
            let x0 = (sweep.points[i - 1].shots as f64).log2();
            let x1 = (sweep.points[i].shots as f64).log2();
            let f = (goal - scores[i - 1]) / (scores[i] - scores[i - 1]);
            return Some((x0 + f * (x1 - x0)).exp2());
        }
    }
    None
}
