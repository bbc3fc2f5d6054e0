//! CSI phase under clock offsets: a bistatic link against the device hearing itself.

use std::f64::consts::PI;

use isac_core::cancellation::fit_line;
use isac_core::channel::{impaired_packet, DriftModel, ImpairmentProfile};
use isac_core::ofdm::{build_packet, extract_csi_series, CodingRate, Mcs, Modulation, PacketMeta};
use isac_core::signal::{derive_seed, rng_from_seed, unwrap_phase, wrap_phase};
use isac_core::Complex64;
use rand::Rng;

use crate::config::BenchConfig;
use crate::output::{cell, f6, Check, Report, Table};

/// Spacing between the measured packets, s.
const PACKET_GAP_S: f64 = 0.01;
/// Subcarrier whose phase is tabulated.
const REPORT_SUBCARRIER: i32 = 1;
const LIMIT_RAD: f64 = 1e-6;

pub fn run(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let radio = cfg.radio_config()?;
    let p = &cfg.phase;
    anyhow::ensure!(p.symbols >= 3, "phase.symbols must be at least 3");
    let used = radio.used_subcarriers().to_vec();
    let n = radio.fft_size() as f64;
    let mut rng = rng_from_seed(derive_seed(seed, 1));

    // A fixed three-path channel; the offsets ride on top of it.
    let paths: Vec<(f64, Complex64)> = (0..3)
        .map(|i| {
            let delay = rng.random_range(0.0..4.0) / radio.sample_rate();
            let amp = Complex64::from_polar(1.0 / (i + 1) as f64, rng.random_range(0.0..2.0 * PI));
            (delay, amp)
        })
        .collect();
    let channel: Vec<Complex64> = used
        .iter()
        .map(|&k| {
            paths
                .iter()
                .map(|&(d, a)| {
                    a * Complex64::from_polar(
                        1.0,
                        -2.0 * PI * k as f64 * radio.subcarrier_spacing() * d,
                    )
                })
                .sum()
        })
        .collect();

    let meta = PacketMeta::new(
        0.0,
        Mcs::new(Modulation::Qpsk, CodingRate::R1_2),
        p.symbols - 2,
        &radio,
    )?;
    let packet = build_packet(&[], &meta, &radio)?;

    let mut bistatic = ImpairmentProfile::random_boot(&mut rng, &radio, p.ppm);
    bistatic.pdd_samples = rng.random_range(0.0..2.0);
    let bistatic = bistatic.with_drift(DriftModel {
        cfo_hz: 50.0,
        cpo_rad: 0.5,
        sfo: 1e-7,
    });
    let monostatic = ImpairmentProfile::monostatic(rng.random_range(0.0..2.0 * PI));

    let report_idx = used
        .iter()
        .position(|&k| k == REPORT_SUBCARRIER)
        .unwrap_or(0);
    let mut table = Table::new(
        "phase_offsets.csv",
        &[
            "link",
            "packet",
            "symbol",
            "phase_rad",
            "model_phase_rad",
            "slope_rad_per_subcarrier",
            "model_slope_rad_per_subcarrier",
            "max_model_error_rad",
        ],
    );
    let mut worst_model_error: f64 = 0.0;
    let mut worst_mono_drift: f64 = 0.0;
    let mut drift_rng = rng_from_seed(derive_seed(seed, 2));
    let mut imp_b = bistatic;
    for pkt in 0..p.packets {
        if pkt > 0 {
            imp_b = imp_b.evolve(PACKET_GAP_S, &mut drift_rng);
        }
        for (link, imp) in [("bistatic", &imp_b), ("monostatic", &monostatic)] {
            let rx = impaired_packet(&packet, &channel, imp, &radio)?;
            let series = extract_csi_series(std::slice::from_ref(&rx), 0, &packet, &radio)?;
            let first: Vec<f64> = series[0]
                .row(0, 0)
                .iter()
                .zip(&channel)
                .map(|(v, h)| (v / h).arg())
                .collect();
            for (l, csi) in series.iter().enumerate() {
                let phases: Vec<f64> = csi
                    .row(0, 0)
                    .iter()
                    .zip(&channel)
                    .map(|(v, h)| (v / h).arg())
                    .collect();
                let model: Vec<f64> = used.iter().map(|&k| imp.csi_phase(k, l, &radio)).collect();
                let err = phases
                    .iter()
                    .zip(&model)
                    .map(|(a, b)| wrap_phase(a - b).abs())
                    .fold(0.0, f64::max);
                worst_model_error = worst_model_error.max(err);
                if link == "monostatic" {
                    let drift = phases
                        .iter()
                        .zip(&first)
                        .map(|(a, b)| wrap_phase(a - b).abs())
                        .fold(0.0, f64::max);
                    worst_mono_drift = worst_mono_drift.max(drift);
                }
                let unwrapped = unwrap_phase(&phases);
                let pairs: Vec<(f64, f64)> =
                    used.iter().map(|&k| k as f64).zip(unwrapped).collect();
                let slope = fit_line(&pairs)?.slope;
                table.push(vec![
                    link.into(),
                    cell(pkt),
                    cell(l),
                    f6(phases[report_idx]),
                    f6(wrap_phase(model[report_idx])),
                    f6(slope),
                    f6(-2.0 * PI * (imp.sfo + imp.pdd_samples) / n),
                    format!("{err:.3e}"),
                ]);
            }
        }
    }
    Ok(Report {
        tables: vec![table],
        checks: vec![
            Check::at_most(
                "bistatic CSI phase against offset model",
                worst_model_error,
                LIMIT_RAD,
                "rad",
            ),
            Check::new(
                &format!("monostatic phase drift over {} symbols", p.symbols),
                worst_mono_drift < LIMIT_RAD,
                format!("{worst_mono_drift:.3e} rad (limit < {LIMIT_RAD:e} rad)"),
            ),
        ],
        notes: vec![format!(
            "bistatic boot offsets: CFO {:.1} Hz, SFO {:.2e}, detection delay {:.3} samples",
            bistatic.cfo_hz, bistatic.sfo, bistatic.pdd_samples
        )],
    })
}
