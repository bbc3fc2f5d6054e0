//! Velocity and position of a walking person from the device's own packets.

use isac_core::channel::{AntennaArray, Point3};
use isac_core::estimation::{
    angle_grid, localize_single, sense_target, velocity_fft_naive, velocity_sparse, Pose,
    SensingEstimate,
};
use isac_core::fusion::{fuse_ml, GridSpec, MessageBus, NoiseModel, SensingMessage};
use isac_core::signal::{derive_seed, rng_from_seed};
use rand::Rng;

use super::common::{
    db_amplitude, monostatic_csi, polar, run_trials, schedule, walking_person, Reflector,
};
use crate::config::BenchConfig;
use crate::output::{cell, f6, median, Check, Report, Table};

/// Doppler below which an atom counts as static, Hz.
const MIN_TARGET_DOPPLER: f64 = 2.0;
const FUSION_TOPIC: &str = "sensing";

struct VelocityTrial {
    truth: f64,
    sparse: f64,
    fft: f64,
}

pub fn run_velocity(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let radio = cfg.radio_config()?;
    let sw = cfg.velocity.sweep();
    let grid = sw.grid()?;
    let opts = cfg.sparse_options();
    let array = AntennaArray {
        n_elements: 1,
        ..AntennaArray::half_wavelength(Point3::zeros(), 0.0, &radio)
    };
    let trials = run_trials(sw.trials, cfg.workers, |i| {
        let s = derive_seed(seed, i as u64);
        let mut rng = rng_from_seed(derive_seed(s, 1));
        let sched = schedule(&sw.schedule, sw.packets, derive_seed(s, 2))?;
        let times = sched.times();
        let mid = 0.5 * (times[0] + times[times.len() - 1]);

        // Walking straight at or away from the device; positive radial velocity approaches.
        let speed = rng.random_range(sw.min_value..=sw.max_value);
        let approaching = rng.random::<bool>();
        let azimuth = rng.random_range(-60.0..60.0);
        let range = rng.random_range(2.0..8.0);
        let heading = if approaching {
            azimuth + 180.0
        } else {
            azimuth
        };
        let reflectors =
            walking_person(&mut rng, polar(range, azimuth), polar(speed, heading), mid);
        let csi = monostatic_csi(
            &array,
            &reflectors,
            &radio,
            times,
            sw.snr_db,
            derive_seed(s, 3),
        )?;
        Ok(VelocityTrial {
            truth: if approaching { speed } else { -speed },
            sparse: velocity_sparse(&csi, &sched, &radio, &grid, &opts)?,
            fft: velocity_fft_naive(&csi, &sched, &radio)?,
        })
    })?;

    let mut table = Table::new(
        "velocity.csv",
        &[
            "trial",
            "truth_velocity_mps",
            "est_velocity_mps",
            "method",
            "snr_db",
            "schedule_kind",
        ],
    );
    let (mut es, mut ef) = (Vec::new(), Vec::new());
    for (i, t) in trials.iter().enumerate() {
        es.push((t.sparse - t.truth).abs());
        ef.push((t.fft - t.truth).abs());
        for (name, v) in [("sparse", t.sparse), ("fft", t.fft)] {
            table.push(vec![
                cell(i),
                f6(t.truth),
                f6(v),
                name.into(),
                f6(sw.snr_db),
                sw.schedule.clone(),
            ]);
        }
    }
    let (ms, mf) = (median(&es), median(&ef));
    Ok(Report {
        tables: vec![table],
        checks: vec![
            Check::at_most("sparse velocity median error", ms, 0.2, "m/s"),
            Check::new(
                "FFT baseline velocity error larger",
                mf > ms,
                format!(
                    "median FFT {mf:.3} m/s > sparse {ms:.3} m/s over {} trials",
                    trials.len()
                ),
            ),
        ],
        notes: vec![],
    })
}

struct LocalizationTrial {
    truth: [f64; 2],
    single: [f64; 2],
    fused: [f64; 2],
    estimates: [SensingEstimate; 2],
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn run_localization(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let radio = cfg.radio_config()?;
    let sw = cfg.localization.sweep();
    let grid = sw.grid()?;
    let opts = cfg.sparse_options();
    let scene = cfg.fusion.scene_m;
    let noise = NoiseModel {
        sigma_range_m: cfg.fusion.sigma_range_m,
        sigma_aoa_deg: cfg.fusion.sigma_aoa_deg,
    };
    let fusion_grid = GridSpec::new(0.0, scene, 0.0, scene, cfg.fusion.cell_m)?;
    let angles = angle_grid(0.5);
    // Two devices facing each other across the room.
    let poses = [
        Pose::new(0.0, scene / 2.0, 0.0),
        Pose::new(scene, scene / 2.0, 180.0),
    ];

    let trials = run_trials(sw.trials, cfg.workers, |i| {
        let s = derive_seed(seed, i as u64);
        let mut rng = rng_from_seed(derive_seed(s, 1));
        let margin = sw.min_value.min(scene / 2.0 - 0.5);
        let truth = [
            rng.random_range(margin..scene - margin),
            rng.random_range(margin..scene - margin),
        ];
        let speed = rng.random_range(0.5..1.2);
        let heading = rng.random_range(0.0..360.0);

        let mut bus = MessageBus::new(0.0)?;
        bus.subscribe(FUSION_TOPIC, 0);
        bus.subscribe(FUSION_TOPIC, 1);
        let mut estimates = [SensingEstimate::default(); 2];
        let mut person_rng = rng_from_seed(derive_seed(s, 2));
        for (d, pose) in poses.iter().enumerate() {
            let sched = schedule(&sw.schedule, sw.packets, derive_seed(s, 10 + d as u64))?;
            let times = sched.times();
            let mid = 0.5 * (times[0] + times[times.len() - 1]);
            let here = Point3::new(pose.x, pose.y, 0.0);
            let target = Point3::new(truth[0], truth[1], 0.0);
            // Each device sees the person relative to itself; the partner is a static reflector.
            let mut reflectors =
                walking_person(&mut person_rng, target - here, polar(speed, heading), mid);
            let partner = &poses[1 - d];
            reflectors.push(Reflector::fixed(
                Point3::new(partner.x, partner.y, 0.0) - here,
                db_amplitude(
                    rng.random_range(-6.0..0.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ),
            ));
            let array = AntennaArray::half_wavelength(Point3::zeros(), pose.heading_deg, &radio);
            let csi = monostatic_csi(
                &array,
                &reflectors,
                &radio,
                times,
                sw.snr_db,
                derive_seed(s, 20 + d as u64),
            )?;
            let est = sense_target(
                &csi,
                &sched,
                &radio,
                &grid,
                &opts,
                &array,
                MIN_TARGET_DOPPLER,
                &angles,
            )?;
            estimates[d] = est;
            bus.publish(FUSION_TOPIC, SensingMessage::estimate(d, 0.0, *pose, est));
        }
        let mut received = vec![SensingMessage::estimate(0, 0.0, poses[0], estimates[0])];
        received.extend(bus.poll(0, 0.0).into_iter().map(|d| d.message));
        let single = localize_single(&estimates[0], &poses[0])?;
        let fused = fuse_ml(&received, &fusion_grid, &noise)?.position;
        Ok(LocalizationTrial {
            truth,
            single,
            fused,
            estimates,
        })
    })?;

    let mut table = Table::new(
        "localization.csv",
        &[
            "trial",
            "truth_x_m",
            "truth_y_m",
            "est_x_m",
            "est_y_m",
            "error_m",
            "method",
        ],
    );
    let mut messages = Table::new(
        "localization_messages.csv",
        &[
            "trial",
            "device_id",
            "t_s",
            "x_m",
            "y_m",
            "heading_deg",
            "range_m",
            "aoa_deg",
            "confidence",
        ],
    );
    let (mut e1, mut e2) = (Vec::new(), Vec::new());
    for (i, t) in trials.iter().enumerate() {
        for (name, est, errs) in [("single", t.single, &mut e1), ("fused", t.fused, &mut e2)] {
            let err = distance(est, t.truth);
            errs.push(err);
            table.push(vec![
                cell(i),
                f6(t.truth[0]),
                f6(t.truth[1]),
                f6(est[0]),
                f6(est[1]),
                f6(err),
                name.into(),
            ]);
        }
        for (d, est) in t.estimates.iter().enumerate() {
            let line = SensingMessage::estimate(d, 0.0, poses[d], *est).to_line();
            let mut row = vec![cell(i)];
            row.extend(line.split(',').map(str::to_string));
            messages.push(row);
        }
    }
    let (m1, m2) = (median(&e1), median(&e2));
    Ok(Report {
        tables: vec![table, messages],
        checks: vec![
            Check::at_most("single-device localization median error", m1, 1.5, "m"),
            Check::new(
                "two-device fusion no worse than one device",
                m2 <= m1,
                format!(
                    "median fused {m2:.3} m <= single {m1:.3} m over {} trials",
                    trials.len()
                ),
            ),
        ],
        notes: vec![],
    })
}
