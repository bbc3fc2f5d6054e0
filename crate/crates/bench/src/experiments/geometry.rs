//! Bistatic link geometry: how strong a reflection is next to the direct path, and how
//! much of a target's motion reaches the path length.

use isac_core::channel::{
    bistatic_projection, power_ratio, propagate_components, AntennaArray, AntennaGains,
    ImpairmentProfile, Point3, PropagationPath, ScenarioGeometry, Trajectory,
};
use isac_core::ofdm::{build_packet, CodingRate, Mcs, Modulation, PacketMeta};
use isac_core::signal::{derive_seed, lin_to_db, mean_power};

use crate::config::BenchConfig;
use crate::output::{f6, median, Check, Report, Table};

/// Positions closer than this to either radio are skipped, m.
const MIN_CLEARANCE_M: f64 = 0.1;
const RATIO_TOLERANCE_DB: f64 = 0.1;
const GAIN_TOLERANCE: f64 = 1e-6;

fn grid_axis(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

/// Reflection-to-direct power ratio of a bistatic link: the closed form against the
/// simulated received components.
pub fn run_los(cfg: &BenchConfig, seed: u64) -> anyhow::Result<Report> {
    let radio = cfg.radio_config()?;
    let g = &cfg.geometry;
    let tx = Point3::zeros();
    let rx = Point3::new(g.los_distance_m, 0.0, 0.0);
    let meta = PacketMeta::new(0.0, Mcs::new(Modulation::Bpsk, CodingRate::R1_2), 4, &radio)?;
    let signal = build_packet(&[], &meta, &radio)?.buffer.padded(64);

    // Targets on the perpendicular bisector of the link, moving away from it.
    let mut sweep = Table::new(
        "los_dominance.csv",
        &[
            "offset_m",
            "tx_range_m",
            "rx_range_m",
            "model_ratio_db",
            "simulated_ratio_db",
        ],
    );
    let mut worst: f64 = 0.0;
    let mut y = g.grid_step_m;
    let mut i = 0;
    while y <= g.max_range_m + 1e-9 {
        let target = Point3::new(g.los_distance_m / 2.0, y, 0.0);
        let (rt, rr) = ((target - tx).norm(), (target - rx).norm());
        let model = power_ratio(g.los_distance_m, rt, rr, g.rcs_m2)?;
        let geom = ScenarioGeometry {
            tx_pos: tx,
            array: AntennaArray {
                n_elements: 1,
                ..AntennaArray::half_wavelength(rx, 180.0, &radio)
            },
            tx_power_w: 0.1,
            gains: AntennaGains::default(),
            paths: vec![
                PropagationPath::line_of_sight(),
                PropagationPath::reflector(Trajectory::Static(target), g.rcs_m2),
            ],
        };
        let comps = propagate_components(
            &signal,
            &geom,
            &ImpairmentProfile::none(),
            -200.0,
            &radio,
            0.0,
            derive_seed(seed, i),
        )?;
        let simulated = lin_to_db(mean_power(&comps[0].reflection) / mean_power(&comps[0].direct));
        worst = worst.max((simulated - model).abs());
        sweep.push(vec![f6(y), f6(rt), f6(rr), f6(model), f6(simulated)]);
        y += g.grid_step_m;
        i += 1;
    }

    let mut map = Table::new("los_dominance_map.csv", &["x_m", "y_m", "ratio_db"]);
    let axis = grid_axis(g.max_range_m, g.grid_step_m);
    for &yy in &axis {
        for &xx in &axis {
            let p = Point3::new(xx, yy, 0.0);
            let (rt, rr) = ((p - tx).norm(), (p - rx).norm());
            if rt < MIN_CLEARANCE_M || rr < MIN_CLEARANCE_M {
                continue;
            }
            map.push(vec![
                f6(xx),
                f6(yy),
                f6(power_ratio(g.los_distance_m, rt, rr, g.rcs_m2)?),
            ]);
        }
    }
    let strongest = map
        .column("ratio_db")
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Report {
        tables: vec![sweep, map],
        checks: vec![Check::at_most(
            "simulated against modelled power ratio",
            worst,
            RATIO_TOLERANCE_DB,
            "dB",
        )],
        notes: vec![format!(
            "strongest reflection on the map sits {:.1} dB relative to the direct path",
            strongest
        )],
    })
}

/// Path-length change per unit radial displacement, for a bistatic link and for a device
/// sensing on its own at the receiver's position.
pub fn run_motion(cfg: &BenchConfig, _seed: u64) -> anyhow::Result<Report> {
    let g = &cfg.geometry;
    let tx = Point3::zeros();
    let rx = Point3::new(g.los_distance_m, 0.0, 0.0);
    let mut table = Table::new(
        "motion_ambiguity.csv",
        &["x_m", "y_m", "bistatic_gain", "monostatic_gain"],
    );
    let mut mono_err: f64 = 0.0;
    let mut bistatic = Vec::new();
    let axis = grid_axis(g.max_range_m, g.grid_step_m);
    for &y in &axis {
        for &x in &axis {
            let p = Point3::new(x, y, 0.0);
            if (p - tx).norm() < MIN_CLEARANCE_M || (p - rx).norm() < MIN_CLEARANCE_M {
                continue;
            }
            let step = (p - rx).normalize() * g.displacement_m;
            let bi = bistatic_projection(&tx, &rx, &p, &step)?.abs() / (2.0 * g.displacement_m);
            let mono = bistatic_projection(&rx, &rx, &p, &step)?.abs() / (2.0 * g.displacement_m);
            mono_err = mono_err.max((mono - 1.0).abs());
            bistatic.push(bi);
            table.push(vec![f6(x), f6(y), f6(bi), f6(mono)]);
        }
    }
    let weak = bistatic.iter().filter(|&&b| b < 0.5).count() as f64 / bistatic.len() as f64;
    let lowest = bistatic.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Report {
        tables: vec![table],
        checks: vec![
            Check::at_most(
                "monostatic radial gain deviation from 1",
                mono_err,
                GAIN_TOLERANCE,
                "",
            ),
            Check::new(
                "bistatic link has motion-insensitive positions",
                lowest < 0.1,
                format!(
                    "lowest bistatic gain {lowest:.4}, {:.1}% of positions below 0.5",
                    100.0 * weak
                ),
            ),
        ],
        notes: vec![format!("median bistatic gain {:.3}", median(&bistatic))],
    })
}
