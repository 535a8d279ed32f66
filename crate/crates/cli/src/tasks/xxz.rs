//! XXZ Gibbs-ensemble classification task: decide the sign of the conserved
//! total magnetization M from sensing shots.
//!
//! Phases are θ_j = coupling·s_j, so the GHZ readout measures
//! Σθ = coupling·M, a conserved quantity: its outcome table is the same for
//! every ring size and temperature and the entangled shot cost is flat. The
//! product readout measures per-spin marginals sin(coupling·s_j) whose
//! thermal spread washes the class contrast out as T grows, so its shot cost
//! rises with temperature.

use std::f64::consts::FRAC_PI_2;

use stochsense::inference::{
    run_classification_sweep, shots_to_target, ClassModel, ClassifierKind, ClassificationSweep,
    SweepResult,
};
use stochsense::protocols::{pool_averaged_probs, Protocol};
use stochsense::rng;
use stochsense::xxz::{
    energy, metropolis_sample_stats, MetropolisSettings, XxzGibbsSpec, XxzParams,
};

use crate::config::XxzTaskConfig;
use crate::output::{fmt_f64, json_f64, CsvTable, TaskResult};
use crate::svg::{line_chart, Series};
use crate::tasks::{crossing_json, derive_seed, push_sweep_rows, StreamBudget};
use crate::CliError;

/// Rows exported to `ensemble.csv`; chains are cheap but CSVs should not be.
const ENSEMBLE_EXPORT_SAMPLES: usize = 2000;

pub fn run(cfg: &XxzTaskConfig, seed: u64) -> Result<TaskResult, CliError> {
    let mut results = CsvTable::new(&[
        "n",
        "temperature (J/kB)",
        "protocol",
        "shots",
        "accuracy",
        "stderr",
        "trials",
    ]);
    let mut budget = StreamBudget::default();
    let mut pool_tag = 0u64;
    let mut per_setting = Vec::new();
    let mut ent_crossings: Vec<f64> = Vec::new();
    let mut unent_series: Vec<Series> = Vec::new();
    let mut ent_series_points: Vec<(f64, f64)> = Vec::new();
    let mut last_ratio: Option<f64> = None;
    let mut monotone = Vec::new();

    let settings = MetropolisSettings {
        tau_therm: cfg.tau_therm,
        tau_sweep: cfg.tau_sweep,
        delta_s: cfg.delta_s,
        delta_phi: cfg.delta_phi,
        n_samples: cfg.pool_size,
    };

    for &n in &cfg.n_values {
        let mut unent_points = Vec::new();
        let mut unent_crossing_values: Vec<f64> = Vec::new();

        for &temperature in &cfg.temperatures {
            let mut pools = Vec::with_capacity(2);
            for m_total in [cfg.m_abs, -cfg.m_abs] {
                let params = XxzParams {
                    n,
                    j_coupling: cfg.j_coupling,
                    delta: cfg.delta,
                    beta: 1.0 / temperature,
                    m_total,
                };
                pools.push(XxzGibbsSpec::build(
                    params,
                    &settings,
                    cfg.coupling,
                    cfg.chains,
                    derive_seed(seed, 0x7870_0000 + pool_tag),
                )?);
                pool_tag += 1;
            }

            let ghz = Protocol::ghz(n, vec![0.0; n])?;
            let product = Protocol::product(n, vec![-FRAC_PI_2; n])?;
            let ghz_tables =
                [&pools[0], &pools[1]].map(|p| pool_averaged_probs(&ghz, p.pool()));
            let product_tables =
                [&pools[0], &pools[1]].map(|p| pool_averaged_probs(&product, p.pool()));
            let [ghz_a, ghz_b] = ghz_tables;
            let [prod_a, prod_b] = product_tables;

            let entangled = sweep(ClassModel::new(ghz_a?, ghz_b?)?, cfg, seed, &mut budget)?;
            let unentangled = sweep(ClassModel::new(prod_a?, prod_b?)?, cfg, seed, &mut budget)?;

            let prefix = [n.to_string(), fmt_f64(temperature)];
            push_sweep_rows(
                &mut results,
                &[prefix[0].clone(), prefix[1].clone(), "entangled".into()],
                &entangled,
            );
            push_sweep_rows(
                &mut results,
                &[prefix[0].clone(), prefix[1].clone(), "unentangled".into()],
                &unentangled,
            );

            let ent_cross = shots_to_target(&entangled, cfg.target_accuracy);
            let unent_cross = shots_to_target(&unentangled, cfg.target_accuracy);
            if let Some(s) = ent_cross.shots {
                ent_crossings.push(s);
                ent_series_points.push((temperature, s));
            }
            if let Some(s) = unent_cross.shots {
                unent_points.push((temperature, s));
                unent_crossing_values.push(s);
            }
            let ratio = match (unent_cross.shots, ent_cross.shots) {
                (Some(u), Some(e)) if e > 0.0 => Some(u / e),
                _ => None,
            };
            last_ratio = ratio;
            per_setting.push(serde_json::json!({
                "n": n,
                "temperature": temperature,
                "pool_size": pools[0].pool().len(),
                "entangled_shots_to_target": crossing_json(&ent_cross),
                "unentangled_shots_to_target": crossing_json(&unent_cross),
                "shots_ratio_unentangled_over_entangled": json_f64(ratio),
            }));
        }

        let strictly_increasing = unent_crossing_values.len() == cfg.temperatures.len()
            && unent_crossing_values.windows(2).all(|w| w[1] > w[0]);
        monotone.push(serde_json::json!({
            "n": n,
            "unentangled_shots_strictly_increase_with_temperature": strictly_increasing,
        }));
        unent_series.push(Series { name: format!("unentangled n={n}"), points: unent_points });
    }

    let ent_spread = if ent_crossings.is_empty() {
        serde_json::Value::Null
    } else {
        let min = ent_crossings.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ent_crossings.iter().copied().fold(0.0f64, f64::max);
        serde_json::json!(max / min - 1.0)
    };

    let mut extra_tables = Vec::new();
    if cfg.export_ensemble {
        let n = *cfg.n_values.iter().max().unwrap();
        extra_tables.push(("ensemble.csv".to_string(), export_ensemble(cfg, n, seed)?));
    }

    let summary = serde_json::json!({
        "task": "xxz",
        "delta": cfg.delta,
        "j_coupling": cfg.j_coupling,
        "m_abs": cfg.m_abs,
        "coupling": cfg.coupling,
        "temperatures": cfg.temperatures,
        "target_accuracy": cfg.target_accuracy,
        "per_setting": per_setting,
        "entangled_shots_spread": ent_spread,
        "temperature_monotonicity": monotone,
        "shots_ratio_at_largest_setting": json_f64(last_ratio),
    });

    let mut series = unent_series;
    series.push(Series { name: "entangled (all n)".into(), points: ent_series_points });
    let svg = line_chart(
        &format!("shots to {} accuracy vs temperature", fmt_f64(cfg.target_accuracy)),
        "temperature (J/kB)",
        "shots",
        false,
        true,
        &series,
    );
    Ok(TaskResult {
        results,
        extra_tables,
        summary,
        svg: Some(("shots_to_target.svg".into(), svg)),
    })
}

fn sweep(
    model: ClassModel,
    cfg: &XxzTaskConfig,
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

/// One dedicated chain at the largest ring, first temperature, M = +|M|,
/// exported with per-row energies.
fn export_ensemble(cfg: &XxzTaskConfig, n: usize, seed: u64) -> Result<CsvTable, CliError> {
    let params = XxzParams {
        n,
        j_coupling: cfg.j_coupling,
        delta: cfg.delta,
        beta: 1.0 / cfg.temperatures[0],
        m_total: cfg.m_abs,
    };
    let settings = MetropolisSettings {
        tau_therm: cfg.tau_therm,
        tau_sweep: cfg.tau_sweep,
        delta_s: cfg.delta_s,
        delta_phi: cfg.delta_phi,
        n_samples: ENSEMBLE_EXPORT_SAMPLES.min(cfg.pool_size),
    };
    let mut stream = rng::master(derive_seed(seed, 0x7870_4558));
    let (configs, _) = metropolis_sample_stats(&params, &settings, &mut stream)?;

    let mut header: Vec<String> = vec!["step".into()];
    header.extend((1..=n).map(|j| format!("s_{j}")));
    header.extend((1..=n).map(|j| format!("phi_{j} (rad)")));
    header.push("energy (J)".into());
    let mut table = CsvTable { header, rows: Vec::new() };
    for (i, config) in configs.iter().enumerate() {
        let mut row = vec![(settings.tau_therm + (i + 1) * settings.tau_sweep).to_string()];
        row.extend(config.s.iter().map(|&s| fmt_f64(s)));
        row.extend(config.phi.iter().map(|&p| fmt_f64(p)));
        row.push(fmt_f64(energy(config, &params)));
        table.push(row);
    }
    Ok(table)
}
