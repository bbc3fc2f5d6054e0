//! Ranging with irregular packets: sparse delay/Doppler recovery, refined off the grid,
//! against IFFT and MUSIC.

use std::f64::consts::PI;

use isac_core::channel::{AntennaArray, Point3};
use isac_core::estimation::{
    delay_to_range, estimate_features_sparse, range_ifft, range_music, refine_atom,
};
use isac_core::signal::{derive_seed, rng_from_seed};
use rand::Rng;

use super::common::{
    db_amplitude, monostatic_csi, polar, run_trials, schedule, walking_person, Reflector,
};
use crate::config::BenchConfig;
use crate::output::{cell, f6, median, Check, Report, Table};

/// Doppler below which an atom counts as static clutter, Hz.
pub const MIN_TARGET_DOPPLER: f64 = 2.0;
/// Static reflectors per scene.
pub const CLUTTER: usize = 4;
/// Clutter power range relative to the torso, dB.
pub const CLUTTER_DB: (f64, f64) = (-12.0, 0.0);

struct Trial {
    truth: f64,
    sparse: f64,
    music: f64,
    ifft: f64,
}

pub fn run(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let radio = cfg.radio_config()?;
    let sw = cfg.ranging.sweep();
    let grid = sw.grid()?;
    let opts = cfg.sparse_options();
    let music_grid: Vec<f64> = (0..=(sw.delay_max_ns as usize))
        .map(|i| i as f64 * 1e-9)
        .collect();

    let trials = run_trials(sw.trials, cfg.workers, |i| {
        let s = derive_seed(seed, i as u64);
        let mut rng = rng_from_seed(derive_seed(s, 1));
        let sched = schedule(&sw.schedule, sw.packets, derive_seed(s, 2))?;
        let times = sched.times();

        // A person walking roughly towards or away from the device among furniture and
        // walls that reflect up to as strongly.
        let range = rng.random_range(sw.min_value..=sw.max_value);
        let azimuth = rng.random_range(-60.0..60.0);
        let speed = rng.random_range(0.5..1.2);
        let heading = azimuth
            + if rng.random::<bool>() { 0.0 } else { 180.0 }
            + rng.random_range(-45.0..45.0);
        let mid = 0.5 * (times[0] + times[times.len() - 1]);
        let mut reflectors =
            walking_person(&mut rng, polar(range, azimuth), polar(speed, heading), mid);
        for _ in 0..CLUTTER {
            let pos = polar(rng.random_range(1.0..20.0), rng.random_range(-80.0..80.0));
            let amp = db_amplitude(
                rng.random_range(CLUTTER_DB.0..CLUTTER_DB.1),
                rng.random_range(0.0..2.0 * PI),
            );
            reflectors.push(Reflector::fixed(pos, amp));
        }
        let array = AntennaArray::half_wavelength(Point3::zeros(), 0.0, &radio);
        let csi = monostatic_csi(
            &array,
            &reflectors,
            &radio,
            times,
            sw.snr_db,
            derive_seed(s, 3),
        )?;

        let fv = estimate_features_sparse(&csi, &sched, &radio, &grid, &opts)?;
        let atom = fv
            .strongest_moving(MIN_TARGET_DOPPLER)
            .or_else(|| fv.dominant())
            .ok_or_else(|| anyhow::anyhow!("sparse estimate is empty"))?;
        let atom = refine_atom(&csi, &sched, &radio, &fv, &atom, &opts)?;
        let music = range_music(&csi, reflectors.len(), &radio, &music_grid)?;
        Ok(Trial {
            truth: range,
            sparse: delay_to_range(atom.delay),
            music: music.ranges[0],
            ifft: range_ifft(&csi, &radio)?,
        })
    })?;

    let mut table = Table::new(
        "ranging.csv",
        &[
            "trial",
            "truth_range_m",
            "est_range_m",
            "method",
            "snr_db",
            "schedule_kind",
        ],
    );
    let mut errs = [Vec::new(), Vec::new(), Vec::new()];
    for (i, t) in trials.iter().enumerate() {
        for (m, (name, est)) in [("sparse", t.sparse), ("music", t.music), ("ifft", t.ifft)]
            .into_iter()
            .enumerate()
        {
            errs[m].push((est - t.truth).abs());
            table.push(vec![
                cell(i),
                f6(t.truth),
                f6(est),
                name.into(),
                f6(sw.snr_db),
                sw.schedule.clone(),
            ]);
        }
    }
    let [sparse, music, ifft] = errs.map(|e| median(&e));
    let mut summary = Table::new("ranging_summary.csv", &["method", "median_error_m"]);
    for (name, v) in [("sparse", sparse), ("music", music), ("ifft", ifft)] {
        summary.push(vec![name.into(), f6(v)]);
    }
    Ok(Report {
        tables: vec![table, summary],
        checks: vec![
            Check::new(
                "ranging error ordering",
                sparse < music && music < ifft,
                format!("median sparse {sparse:.3} m < MUSIC {music:.3} m < IFFT {ifft:.3} m over {} trials", trials.len()),
            ),
            Check::at_most("sparse ranging median", sparse, 2.84, "m"),
        ],
        notes: vec![],
    })
}
