use std::f64::consts::PI;

use num_complex::Complex64;

use super::{estimate_features_sparse, Atom, FeatureGrid, SparseOptions, TxSchedule};
use crate::channel::AntennaArray;
use crate::error::{ensure, Result};
use crate::ofdm::{CsiMatrix, RadioConfig};
use crate::SPEED_OF_LIGHT;

/// Position and heading of a device in the world frame (heading counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Self {
        Self { x, y, heading_deg }
    }
}

/// Per-device sensing output. Missing quantities are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensingEstimate {
    /// Round-trip time of flight, s.
    pub tof: Option<f64>,
    /// Angle of arrival from array boresight, degrees, counter-clockwise positive.
    pub aoa_deg: Option<f64>,
    pub velocity: Option<f64>,
    pub confidence: f64,
}

impl SensingEstimate {
    /// Monostatic range `c tof / 2`.
    pub fn range(&self) -> Option<f64> {
        self.tof.map(|t| SPEED_OF_LIGHT * t / 2.0)
    }
}

/// Target position from one device's range and angle.
pub fn localize_single(est: &SensingEstimate, pose: &Pose) -> Result<[f64; 2]> {
    let (range, aoa) = match (est.range(), est.aoa_deg) {
        (Some(r), Some(a)) => (r, a),
        _ => {
            return crate::error::invalid(
                "localization needs both time of flight and angle of arrival",
            )
        }
    };
    ensure(range.is_finite() && range >= 0.0, || {
        format!("invalid range {range}")
    })?;
    ensure((-90.0..=90.0).contains(&aoa), || {
        format!("angle {aoa} outside [-90, 90]")
    })?;
    let bearing = (pose.heading_deg + aoa).to_radians();
    Ok([
        pose.x + range * bearing.cos(),
        pose.y + range * bearing.sin(),
    ])
}

/// Projection of each receive antenna's CSI onto one delay/Doppler atom.
///
/// The result is the atom's complex gain per antenna, which carries the array phase of
/// that path alone: other atoms are suppressed by their delay/Doppler mismatch.
pub fn atom_response(
    csi_series: &[CsiMatrix],
    times: &[f64],
    cfg: &RadioConfig,
    atom: &Atom,
) -> Result<Vec<Complex64>> {
    ensure(
        !csi_series.is_empty() && csi_series.len() == times.len(),
        || "need one transmit time per CSI entry".to_string(),
    )?;
    let df = cfg.subcarrier_spacing();
    let t0 = times[0];
    let n_rx = csi_series[0].n_rx();
    let mut out = vec![Complex64::new(0.0, 0.0); n_rx];
    for (c, &t) in csi_series.iter().zip(times) {
        ensure(c.n_rx() == n_rx, || {
            "antenna count changes across the series".to_string()
        })?;
        let time_phase = Complex64::from_polar(1.0, -2.0 * PI * atom.doppler * (t - t0));
        for (rx, acc) in out.iter_mut().enumerate() {
            let s: Complex64 = c
                .subcarriers()
                .iter()
                .zip(c.row(rx, 0))
                .map(|(&k, &v)| {
                    v * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * df * atom.delay)
                })
                .sum();
            *acc += s * time_phase;
        }
    }
    Ok(out)
}

/// Angle (degrees) whose steering vector best matches `response`, searched over `grid_deg`.
pub fn steering_search(
    response: &[Complex64],
    array: &AntennaArray,
    wavelength: f64,
    grid_deg: &[f64],
) -> Result<f64> {
    ensure(response.len() == array.n_elements, || {
        format!(
            "response has {} entries for {} antennas",
            response.len(),
            array.n_elements
        )
    })?;
    ensure(!grid_deg.is_empty(), || "empty angle grid".to_string())?;
    let score = |deg: f64| -> f64 {
        array
            .steering(deg.to_radians().sin(), wavelength)
            .iter()
            .zip(response)
            .map(|(a, r)| a.conj() * r)
            .sum::<Complex64>()
            .norm_sqr()
    };
    Ok(grid_deg
        .iter()
        .copied()
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .expect("non-empty grid"))
}

/// Monostatic ToF, AoA and velocity of the strongest moving reflector.
///
/// The sparse estimator runs on receive antenna `opts.rx`; the chosen atom is the strongest
/// one with at least `min_doppler` Hz of Doppler, or the strongest overall when nothing
/// moves. Its per-antenna response gives the angle. Confidence is the atom's share of the
/// recovered coefficient energy.
#[allow(clippy::too_many_arguments)]
pub fn sense_target(
    csi_series: &[CsiMatrix],
    sched: &TxSchedule,
    cfg: &RadioConfig,
    grid: &FeatureGrid,
    opts: &SparseOptions,
    array: &AntennaArray,
    min_doppler: f64,
    angle_grid_deg: &[f64],
) -> Result<SensingEstimate> {
    let fv = estimate_features_sparse(csi_series, sched, cfg, grid, opts)?;
    let Some(atom) = fv.strongest_moving(min_doppler).or_else(|| fv.dominant()) else {
        return Ok(SensingEstimate::default());
    };
    let total: f64 = fv.coefficients.iter().map(|c| c.norm_sqr()).sum();
    let aoa = if array.n_elements > 1 {
        let resp = atom_response(csi_series, sched.times(), cfg, &atom)?;
        Some(steering_search(
            &resp,
            array,
            cfg.wavelength(),
            angle_grid_deg,
        )?)
    } else {
        None
    };
    Ok(SensingEstimate {
        tof: Some(atom.delay),
        aoa_deg: aoa,
        velocity: Some(atom.doppler * cfg.wavelength() / 2.0),
        confidence: if total > 0.0 {
            atom.amplitude.norm_sqr() / total
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(range: f64, aoa: f64) -> SensingEstimate {
        SensingEstimate {
            tof: Some(2.0 * range / SPEED_OF_LIGHT),
            aoa_deg: Some(aoa),
            ..Default::default()
        }
    }

    #[test]
    fn polar_to_cartesian() {
        let p = localize_single(&est(5.0, 0.0), &Pose::new(0.0, 0.0, 0.0)).unwrap();
        assert!((p[0] - 5.0).abs() < 1e-9 && p[1].abs() < 1e-9);
        let p = localize_single(&est(5.0, 30.0), &Pose::new(0.0, 0.0, 0.0)).unwrap();
        assert!((p[0] - 4.330127).abs() < 1e-6 && (p[1] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn missing_angle_rejected() {
        let e = SensingEstimate {
            aoa_deg: None,
            ..est(5.0, 0.0)
        };
        assert!(localize_single(&e, &Pose::new(0.0, 0.0, 0.0)).is_err());
    }
}
