//! Sensing inside a Wi-Fi MAC: what a separator left on during receptions costs, and
//! whether sensing changes communication at all.

use isac_core::mac::{
    run_scenario, CommsStats, DeviceConfig, MacConfig, ScenarioResult, TrafficModel,
};
use isac_core::signal::derive_seed;

use super::common::traffic_model;
use crate::config::BenchConfig;
use crate::output::{cell, f6, Check, Report, Table};

const MIN_SNR_DROP_DB: f64 = 10.0;

fn pair(cfg: &BenchConfig, traffic: TrafficModel) -> MacConfig {
    MacConfig {
        devices: vec![
            DeviceConfig {
                position: [0.0, 0.0],
                traffic,
                peer: 1,
            },
            DeviceConfig {
                position: [cfg.mac.distance_m, 0.0],
                traffic,
                peer: 0,
            },
        ],
        duration_s: cfg.mac.duration_s,
        m_timer_s: cfg.mac.m_timer_s,
        tx_power_dbm: cfg.mac.tx_power_dbm,
        ..MacConfig::default()
    }
}

fn stats_row(name: &str, s: &CommsStats) -> Vec<String> {
    vec![
        name.into(),
        f6(s.delay_ms_percentile(0.5)),
        f6(s.delay_ms_percentile(0.95)),
        f6(s.loss_rate()),
    ]
}

pub fn run_separator_harm(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let base = pair(cfg, TrafficModel::streaming());
    let forced = MacConfig {
        force_separator: true,
        ..base.clone()
    };
    let a = run_scenario(&base, seed)?;
    let b = run_scenario(&forced, seed)?;
    let mut table = Table::new(
        "separator_harm.csv",
        &[
            "mode",
            "mean_snr_db",
            "mean_effective_snr_db",
            "delivered",
            "loss_rate",
        ],
    );
    for (mode, r) in [("state_controlled", &a), ("forced_on", &b)] {
        table.push(vec![
            mode.into(),
            f6(r.stats.mean_snr_db()),
            f6(r.stats.mean_effective_snr_db()),
            cell(r.stats.delivered),
            f6(r.stats.loss_rate()),
        ]);
    }
    let drop = a.stats.mean_effective_snr_db() - b.stats.mean_effective_snr_db();
    Ok(Report {
        tables: vec![table],
        checks: vec![Check::at_least(
            "reception SNR lost to a forced separator",
            drop,
            MIN_SNR_DROP_DB,
            "dB",
        )],
        notes: vec![],
    })
}

fn invariant_row(name: &str, r: &ScenarioResult) -> Vec<String> {
    vec![
        name.into(),
        cell(r.log.entries.len()),
        cell(r.log.separator_mismatches()),
        cell(r.log.violations()),
        cell(r.overlapping_transmissions),
        cell(r.calibrations),
        f6(r.max_m_dwell_s),
        f6(r.end_time),
    ]
}

pub fn run_comms_impact(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let mut comms = Table::new(
        "comms_impact.csv",
        &["scenario", "delay_ms_p50", "delay_ms_p95", "loss_rate"],
    );
    let mut identical = true;
    let mut detail = Vec::new();
    for (i, kind) in ["streaming", "gaming"].into_iter().enumerate() {
        let on = pair(cfg, traffic_model(kind));
        let off = MacConfig {
            sensing_enabled: false,
            ..on.clone()
        };
        let s = derive_seed(seed, i as u64);
        let a = run_scenario(&on, s)?;
        let b = run_scenario(&off, s)?;
        identical &= a.stats == b.stats;
        detail.push(format!(
            "{kind} {} vs {} delivered",
            a.stats.delivered, b.stats.delivered
        ));
        comms.push(stats_row(&format!("{kind}_sensing_on"), &a.stats));
        comms.push(stats_row(&format!("{kind}_sensing_off"), &b.stats));
    }

    // A long mixed-traffic run for the state invariants.
    let mut long = pair(cfg, TrafficModel::streaming());
    long.devices[1].traffic = TrafficModel::gaming();
    long.devices.push(DeviceConfig {
        position: [0.5 * cfg.mac.distance_m, 0.75 * cfg.mac.distance_m],
        traffic: TrafficModel::Regular { rate_hz: 40.0 },
        peer: 0,
    });
    long.duration_s = 3600.0;
    long.max_events = Some(cfg.mac.invariant_events);
    let r = run_scenario(&long, derive_seed(seed, 9))?;
    let mut inv = Table::new(
        "mac_invariants.csv",
        &[
            "scenario",
            "events",
            "separator_mismatches",
            "protocol_violations",
            "overlapping_transmissions",
            "calibrations",
            "max_m_dwell_s",
            "simulated_s",
        ],
    );
    inv.push(invariant_row("mixed_three_devices", &r));
    let clean = r.log.separator_mismatches() == 0
        && r.log.violations() == 0
        && r.overlapping_transmissions == 0;
    Ok(Report {
        tables: vec![comms, inv],
        checks: vec![
            Check::new(
                "sensing on/off give identical comms statistics",
                identical,
                detail.join(", "),
            ),
            Check::new(
                "separator active exactly in M state",
                clean && r.log.entries.len() >= cfg.mac.invariant_events,
                format!(
                    "{} events, {} mismatches, {} violations, {} overlaps",
                    r.log.entries.len(),
                    r.log.separator_mismatches(),
                    r.log.violations(),
                    r.overlapping_transmissions
                ),
            ),
        ],
        notes: vec![],
    })
}
