//! Sum-constrained classification task: decide Σθ = +c versus −c.
//!
//! The GHZ readout sees the full constraint directly, so its outcome table,
//! and with it the shot cost, is independent of the register size. The
//! product readout only retains the all-qubit correlator, whose contrast
//! decays as `2^{-(n-1)}`; its shot cost must grow with n.

use stochsense::inference::{
    run_classification_sweep, shots_to_target, ClassModel, ClassifierKind, ClassificationSweep,
    SweepResult,
};
use stochsense::protocols::{
    ghz_offset_and_product_offsets, sum_constrained_ghz_excited, sum_constrained_product_table,
};

use crate::config::GhzClassifyConfig;
use crate::output::{fmt_f64, CsvTable, TaskResult};
use crate::svg::{line_chart, Series};
use crate::tasks::{crossing_json, push_sweep_rows, StreamBudget};
use crate::CliError;

pub fn run(cfg: &GhzClassifyConfig, seed: u64) -> Result<TaskResult, CliError> {
    let mut results =
        CsvTable::new(&["n", "protocol", "shots", "accuracy", "stderr", "trials"]);
    let mut budget = StreamBudget::default();
    let mut per_n = Vec::new();
    let mut ent_points = Vec::new();
    let mut unent_points = Vec::new();

    for &n in &cfg.n_values {
        let op = ghz_offset_and_product_offsets(n)?;

        // GHZ readout at ν = 0: excited probability (1 + sin(±c))/2.
        let ghz_tables = [cfg.c, -cfg.c].map(|c| {
            let p = sum_constrained_ghz_excited(c, 0.0);
            vec![1.0 - p, p]
        });
        let product_tables = [cfg.c, -cfg.c]
            .map(|c| sum_constrained_product_table(n, c, &op.product_nu));
        let [prod_a, prod_b] = product_tables;
        let [ghz_a, ghz_b] = ghz_tables;

        let entangled = sweep(ClassModel::new(ghz_a, ghz_b)?, cfg, seed, &mut budget)?;
        let unentangled = sweep(ClassModel::new(prod_a?, prod_b?)?, cfg, seed, &mut budget)?;

        let n_str = n.to_string();
        push_sweep_rows(&mut results, &[n_str.clone(), "entangled".into()], &entangled);
        push_sweep_rows(&mut results, &[n_str, "unentangled".into()], &unentangled);

        let ent_cross = shots_to_target(&entangled, cfg.target_accuracy);
        let unent_cross = shots_to_target(&unentangled, cfg.target_accuracy);
        if let Some(s) = ent_cross.shots {
            ent_points.push((n as f64, s));
        }
        if let Some(s) = unent_cross.shots {
            unent_points.push((n as f64, s));
        }
        per_n.push(serde_json::json!({
            "n": n,
            "product_offsets": op.product_nu,
            "entangled_shots_to_target": crossing_json(&ent_cross),
            "unentangled_shots_to_target": crossing_json(&unent_cross),
        }));
    }

    let ent_crossings: Vec<f64> = ent_points.iter().map(|p| p.1).collect();
    let growth = growth_ratios(&unent_points);
    let summary = serde_json::json!({
        "task": "ghz-classify",
        "c": cfg.c,
        "target_accuracy": cfg.target_accuracy,
        "per_n": per_n,
        "entangled_shots_spread": spread(&ent_crossings),
        "unentangled_growth_ratios": growth,
    });

    let svg = line_chart(
        &format!("shots to {} accuracy vs register size", fmt_f64(cfg.target_accuracy)),
        "n",
        "shots",
        false,
        true,
        &[
            Series { name: "entangled".into(), points: ent_points },
            Series { name: "unentangled".into(), points: unent_points },
        ],
    );
    Ok(TaskResult {
        results,
        extra_tables: Vec::new(),
        summary,
        svg: Some(("shots_to_target.svg".into(), svg)),
    })
}

fn sweep(
    model: ClassModel,
    cfg: &GhzClassifyConfig,
    seed: u64,
    budget: &mut StreamBudget,
) -> Result<SweepResult, CliError> {
    let stream_offset = budget.sweep_block(cfg.shots.len(), cfg.trials);
    Ok(run_classification_sweep(&ClassificationSweep {
        model: &model,
        classifier: ClassifierKind::Mle,
        shots_grid: &cfg.shots,
        trials: cfg.trials,
        seed,
        stream_offset,
    })?)
}

/// max/min − 1 over the crossings, `null` unless every sweep crossed.
pub(crate) fn spread(crossings: &[f64]) -> serde_json::Value {
    if crossings.is_empty() {
        return serde_json::Value::Null;
    }
    let min = crossings.iter().copied().fold(f64::INFINITY, f64::min);
    let max = crossings.iter().copied().fold(0.0f64, f64::max);
    if min > 0.0 {
        serde_json::json!(max / min - 1.0)
    } else {
        serde_json::Value::Null
    }
}

/// Consecutive crossing ratios along ascending n.
pub(crate) fn growth_ratios(points: &[(f64, f64)]) -> Vec<serde_json::Value> {
    points
        .windows(2)
        .map(|w| {
            if w[0].1 > 0.0 {
                serde_json::json!({
                    "from_n": w[0].0,
                    "to_n": w[1].0,
                    "ratio": w[1].1 / w[0].1,
                })
            } else {
                serde_json::Value::Null
            }
        })
        .collect()
}
