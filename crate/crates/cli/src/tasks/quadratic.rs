//! Quadratically constrained overlap task: verify that the return amplitude
//! depends on the parameters only through the constraint value, and measure
//! the first-order response when the constraint is relaxed.
//!
//! For each variable count the driver draws random points on the constraint
//! surface (both group sums pinned to a random point on the radius-√C
//! circle), evaluates the overlap against cos(√C), then rescales each point
//! to constraint value C + ε and compares the change in |overlap|² with the
//! analytic slope −ε·sinc(2√C).

use std::f64::consts::TAU;

use rand::Rng;

use stochsense::distributions::sinc;
use stochsense::qsim::{quadratic_constraint_overlap, PauliStringAssignment};
use stochsense::rng;

use crate::config::QuadraticConfig;
use crate::output::{fmt_f64, CsvTable, TaskResult};
use crate::tasks::derive_seed;
use crate::CliError;

pub fn run(cfg: &QuadraticConfig, seed: u64) -> Result<TaskResult, CliError> {
    let mut results = CsvTable::new(&[
        "n_var",
        "sample",
        "overlap_re",
        "overlap_im",
        "overlap_abs_error",
        "measured_shift",
        "predicted_shift",
    ]);
    let expected = cfg.c.sqrt().cos();
    let predicted_shift = -cfg.epsilon * sinc(2.0 * cfg.c.sqrt());
    let scale = ((cfg.c + cfg.epsilon) / cfg.c).sqrt();

    let mut per_n = Vec::new();
    for &n_var in &cfg.n_var_values {
        let assign = PauliStringAssignment::new(n_var)?;
        let mut stream = rng::master(derive_seed(seed, 0x7175_0000 + n_var as u64));
        let mut max_abs_error = 0.0f64;
        let mut max_im = 0.0f64;
        let mut shift_ratio_sum = 0.0;
        for sample in 0..cfg.samples {
            let theta = constrained_point(n_var, cfg.c, &mut stream);
            let overlap = quadratic_constraint_overlap(&theta, &assign)?;
            let perturbed: Vec<f64> = theta.iter().map(|t| t * scale).collect();
            let shifted = quadratic_constraint_overlap(&perturbed, &assign)?;
            let measured_shift = shifted.norm_sqr() - overlap.norm_sqr();

            max_abs_error = max_abs_error.max((overlap.re - expected).abs());
            max_im = max_im.max(overlap.im.abs());
            shift_ratio_sum += measured_shift / predicted_shift;
            results.push(vec![
                n_var.to_string(),
                sample.to_string(),
                fmt_f64(overlap.re),
                fmt_f64(overlap.im),
                fmt_f64((overlap.re - expected).abs()),
                fmt_f64(measured_shift),
                fmt_f64(predicted_shift),
            ]);
        }
        per_n.push(serde_json::json!({
            "n_var": n_var,
            "n_qubits": assign.n_qubits(),
            "max_overlap_error": max_abs_error,
            "max_overlap_im": max_im,
            "mean_shift_ratio": shift_ratio_sum / cfg.samples as f64,
        }));
    }

    let summary = serde_json::json!({
        "task": "quadratic",
        "c": cfg.c,
        "epsilon": cfg.epsilon,
        "samples": cfg.samples,
        "expected_overlap": expected,
        "predicted_shift": predicted_shift,
        "per_n": per_n,
    });
    Ok(TaskResult { results, extra_tables: Vec::new(), summary, svg: None })
}

/// Random point with (Σ first half)² + (Σ second half)² = c: pick an angle on
/// the radius-√c circle, then shift raw uniform draws in each half so the
/// half sums land exactly on the two coordinates.
fn constrained_point(n_var: usize, c: f64, stream: &mut rng::Stream) -> Vec<f64> {
    let half = n_var / 2;
    let psi = stream.random_range(0.0..TAU);
    let targets = [c.sqrt() * psi.cos(), c.sqrt() * psi.sin()];
    let mut theta = Vec::with_capacity(n_var);
    for target in targets {
        let raw: Vec<f64> = (0..half).map(|_| stream.random_range(-1.0..1.0)).collect();
        let shift = (target - raw.iter().sum::<f64>()) / half as f64;
        theta.extend(raw.into_iter().map(|u| u + shift));
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constrained_points_sit_on_the_surface() {
        let mut stream = rng::master(9);
        for _ in 0..20 {
            let theta = constrained_point(6, 0.8, &mut stream);
            let s1: f64 = theta[..3].iter().sum();
            let s2: f64 = theta[3..].iter().sum();
            assert_abs_diff_eq!(s1 * s1 + s2 * s2, 0.8, epsilon = 1e-12);
        }
    }

    #[test]
    fn overlap_matches_cos_sqrt_c_and_slope_is_analytic() {
        let cfg = QuadraticConfig {
            n_var_values: vec![2, 4],
            c: 0.5,
            samples: 8,
            epsilon: 1e-3,
        };
        let result = run(&cfg, 11).unwrap();
        for entry in result.summary["per_n"].as_array().unwrap() {
            assert!(entry["max_overlap_error"].as_f64().unwrap() < 1e-10);
            assert!(entry["max_overlap_im"].as_f64().unwrap() < 1e-10);
            let ratio = entry["mean_shift_ratio"].as_f64().unwrap();
            assert!((ratio - 1.0).abs() < 0.05, "slope ratio {ratio}");
        }
        assert_eq!(result.results.rows.len(), 16);
    }
}
