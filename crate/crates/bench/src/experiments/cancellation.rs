//! Self-interference budget of the separator and what it does to reflections.

use isac_core::cancellation::{
    measure_budget, preservation_trial, BudgetReport, PreservationReport,
};
use isac_core::signal::derive_seed;

use super::common::run_trials;
use crate::config::BenchConfig;
use crate::output::{cell, f6, median, Check, Report, Table};

struct Scene {
    budget: BudgetReport,
    adapted: PreservationReport,
    ablation: PreservationReport,
}

fn min(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::INFINITY, f64::min)
}

fn max(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

pub fn run(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let canc = cfg.cancellation_config()?;
    let scenes = run_trials(cfg.cancellation.scenes, cfg.workers, |i| {
        let s = derive_seed(seed, i as u64);
        Ok(Scene {
            budget: measure_budget(&canc, derive_seed(s, 1), 0.0)?,
            adapted: preservation_trial(&canc, derive_seed(s, 2), true)?,
            ablation: preservation_trial(&canc, derive_seed(s, 2), false)?,
        })
    })?;
    anyhow::ensure!(!scenes.is_empty(), "cancellation.scenes must be at least 1");

    let mut budget = Table::new(
        "cancellation_budget.csv",
        &[
            "scene",
            "first_stage_db",
            "analog_db",
            "digital_db",
            "total_db",
            "residual_dbm",
            "noise_dbm",
        ],
    );
    let mut preservation = Table::new(
        "reflection_preservation.csv",
        &[
            "scene",
            "calibration",
            "reflection_dbm",
            "reflection_change_db",
            "leakage_suppression_db",
        ],
    );
    for (i, s) in scenes.iter().enumerate() {
        let b = &s.budget;
        budget.push(vec![
            cell(i),
            f6(b.first_stage_db),
            f6(b.analog_db),
            f6(b.digital_db),
            f6(b.total_db),
            f6(b.residual_dbm),
            f6(b.noise_dbm),
        ]);
        for (mode, p) in [
            ("dummy_load", &s.adapted),
            ("antenna_connected", &s.ablation),
        ] {
            preservation.push(vec![
                cell(i),
                mode.into(),
                f6(p.reflection_dbm),
                f6(p.reflection_change_db),
                f6(p.leakage_suppression_db),
            ]);
        }
    }
    let mut calibration = Table::new(
        "calibration_log.csv",
        &["time_s", "stage", "residual_dB", "port"],
    );
    for e in &scenes[0].budget.calibration_log {
        calibration.push(vec![
            format!("{:.6}", e.time_s),
            e.stage.into(),
            format!("{:.3}", e.residual_dbm),
            e.port.name().into(),
        ]);
    }

    let b = || scenes.iter().map(|s| &s.budget);
    let first_dev = max(b().map(|r| (r.first_stage_db - 12.0).abs()));
    let analog = min(b().map(|r| r.analog_db));
    let digital = min(b().map(|r| r.digital_db));
    let total = min(b().map(|r| r.total_db));
    let residual = max(b().map(|r| r.residual_dbm - r.noise_dbm));
    let kept = max(scenes.iter().map(|s| s.adapted.reflection_change_db.abs()));
    let ablation: Vec<f64> = scenes
        .iter()
        .map(|s| -s.ablation.reflection_change_db)
        .collect();
    let lost = median(&ablation);
    let n = scenes.len();
    Ok(Report {
        tables: vec![budget, preservation, calibration],
        checks: vec![
            Check::at_most(
                "first stage deviation from 12 dB (worst scene)",
                first_dev,
                1.0,
                "dB",
            ),
            Check::at_least("analog cancellation (worst scene)", analog, 35.0, "dB"),
            Check::at_least("digital cancellation (worst scene)", digital, 20.0, "dB"),
            Check::at_least("total cancellation (worst scene)", total, 70.0, "dB"),
            Check::at_most(
                "residual above noise floor (worst scene)",
                residual,
                3.0,
                "dB",
            ),
            Check::at_most(
                &format!("reflection change with dummy-load calibration over {n} scenes"),
                kept,
                1.0,
                "dB",
            ),
            Check::at_least(
                "reflection loss without self-adaptation (median)",
                lost,
                10.0,
                "dB",
            ),
        ],
        notes: vec![format!(
            "median total cancellation {:.1} dB",
            median(&b().map(|r| r.total_db).collect::<Vec<_>>())
        )],
    })
}
