use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    los_gain, path_gain, AntennaArray, AntennaGains, ImpairmentProfile, Point3, Trajectory,
};
use crate::error::{ensure, Result};
use crate::ofdm::RadioConfig;
use crate::signal::{
    derive_seed, fft_in_place, ifft_in_place, rng_from_seed, ComplexGaussian, SampleBuffer,
};
use crate::SPEED_OF_LIGHT;

/// Role of a propagation path in the received signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Direct coupling of the transmitter into its own receiver.
    Leakage,
    /// Direct path between separate transmitter and receiver.
    LineOfSight,
    /// Reflection off a target or clutter.
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathAmplitude {
    /// Complex amplitude relative to a unit-power transmit signal (square root of watts).
    Explicit(Complex64),
    /// Amplitude from the radar equation with this cross section in m^2.
    Radar { rcs: f64 },
}

/// One propagation path.
///
/// Paths with a trajectory derive delay, angle and (for radar amplitudes) power from
/// geometry; paths without one use the fixed `delay` and `aoa_deg`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPath {
    pub kind: PathKind,
    pub amplitude: PathAmplitude,
    pub trajectory: Option<Trajectory>,
    pub delay: f64,
    pub aoa_deg: f64,
}

impl PropagationPath {
    /// A reflector following `trajectory` with radar cross section `rcs`.
    pub fn reflector(trajectory: Trajectory, rcs: f64) -> Self {
        Self {
            kind: PathKind::Reflection,
            amplitude: PathAmplitude::Radar { rcs },
            trajectory: Some(trajectory),
            delay: 0.0,
            aoa_deg: 0.0,
        }
    }

    /// A reflector at `trajectory` whose amplitude is given directly.
    pub fn reflector_with_amplitude(trajectory: Trajectory, amplitude: Complex64) -> Self {
        Self {
            amplitude: PathAmplitude::Explicit(amplitude),
            ..Self::reflector(trajectory, 0.0)
        }
    }

    /// A fixed-delay path with explicit amplitude and arrival angle.
    pub fn fixed(kind: PathKind, delay: f64, amplitude: Complex64, aoa_deg: f64) -> Self {
        Self {
            kind,
            amplitude: PathAmplitude::Explicit(amplitude),
            trajectory: None,
            delay,
            aoa_deg,
        }
    }

    /// One tap of transmitter leakage `delay` seconds late.
    pub fn leakage(delay: f64, amplitude: Complex64) -> Self {
        Self::fixed(PathKind::Leakage, delay, amplitude, 0.0)
    }

    /// The direct path of a bistatic link; amplitude and delay follow from the device positions.
    pub fn line_of_sight() -> Self {
        Self {
            kind: PathKind::LineOfSight,
            amplitude: PathAmplitude::Radar { rcs: 0.0 },
            trajectory: None,
            delay: 0.0,
            aoa_deg: 0.0,
        }
    }
}

/// Transmitter, receive array and the paths between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub tx_pos: Point3,
    pub array: AntennaArray,
    pub tx_power_w: f64,
    pub gains: AntennaGains,
    pub paths: Vec<PropagationPath>,
}

/// State of one path at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PathSnapshot {
    pub delay: f64,
    pub amplitude: Complex64,
    pub sin_aoa: f64,
}

impl ScenarioGeometry {
    /// Distance between transmitter and the receive array reference element.
    pub fn los_distance(&self) -> f64 {
        (self.tx_pos - self.array.position).norm()
    }

    pub fn is_monostatic(&self) -> bool {
        self.los_distance() < 1e-9
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.tx_power_w >= 0.0 && self.tx_power_w.is_finite(),
            || "transmit power must be non-negative".to_string(),
        )?;
        ensure(self.array.n_elements >= 1, || {
            "array needs at least one element".to_string()
        })?;
        for (i, p) in self.paths.iter().enumerate() {
            ensure(p.delay >= 0.0 && p.delay.is_finite(), || {
                format!("path {i} has a negative delay")
            })?;
            if let PathAmplitude::Radar { rcs } = p.amplitude {
                ensure(rcs >= 0.0, || format!("path {i} has a negative RCS"))?;
            }
            if p.kind == PathKind::LineOfSight {
                ensure(!self.is_monostatic(), || {
                    "monostatic scenes have no direct path".to_string()
                })?;
            }
            if p.kind == PathKind::Reflection && p.trajectory.is_none() {
                ensure(matches!(p.amplitude, PathAmplitude::Explicit(_)), || {
                    format!("path {i}: radar amplitudes need a trajectory")
                })?;
            }
        }
        Ok(())
    }

    /// Delay and length of `path` at time `t`.
    pub(crate) fn snapshot(
        &self,
        path: &PropagationPath,
        t: f64,
        radio: &RadioConfig,
    ) -> Result<PathSnapshot> {
        match path.kind {
            PathKind::LineOfSight => {
                let l = self.los_distance();
                Ok(PathSnapshot {
                    delay: l / SPEED_OF_LIGHT,
                    amplitude: Complex64::new(
                        los_gain(l, radio, self.tx_power_w, self.gains)?,
                        0.0,
                    ),
                    sin_aoa: self.array.sin_aoa(&self.tx_pos),
                })
            }
            _ => match &path.trajectory {
                Some(traj) => {
                    let p = traj.position(t);
                    let r_tx = (p - self.tx_pos).norm();
                    let r_rx = (p - self.array.position).norm();
                    let amplitude = match path.amplitude {
                        PathAmplitude::Explicit(a) => a,
                        PathAmplitude::Radar { rcs } => Complex64::new(
                            path_gain(r_tx, r_rx, rcs, radio, self.tx_power_w, self.gains)?,
                            0.0,
                        ),
                    };
                    Ok(PathSnapshot {
                        delay: (r_tx + r_rx) / SPEED_OF_LIGHT,
                        amplitude,
                        sin_aoa: self.array.sin_aoa(&p),
                    })
                }
                None => {
                    let amplitude = match path.amplitude {
                        PathAmplitude::Explicit(a) => a,
                        PathAmplitude::Radar { .. } => Complex64::new(0.0, 0.0),
                    };
                    Ok(PathSnapshot {
                        delay: path.delay,
                        amplitude,
                        sin_aoa: path.aoa_deg.to_radians().sin(),
                    })
                }
            },
        }
    }
}

/// Per-antenna received signal split by origin so each part can be tracked through processing.
#[derive(Debug, Clone, PartialEq)]
pub struct RxComponents {
    pub leakage: Vec<Complex64>,
    pub direct: Vec<Complex64>,
    pub reflection: Vec<Complex64>,
    pub noise: Vec<Complex64>,
    pub sample_rate: f64,
    pub start_time: f64,
}

impl RxComponents {
    pub fn zeros(len: usize, sample_rate: f64, start_time: f64) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self {
            leakage: z.clone(),
            direct: z.clone(),
            reflection: z.clone(),
            noise: z,
            sample_rate,
            start_time,
        }
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }

    /// Sum of all components.
    pub fn total(&self) -> Vec<Complex64> {
        (0..self.len())
            .map(|i| self.leakage[i] + self.direct[i] + self.reflection[i] + self.noise[i])
            .collect()
    }

    pub fn to_buffer(&self) -> Result<SampleBuffer> {
        SampleBuffer::new(self.total(), self.sample_rate, self.start_time)
    }

    /// Applies the same linear operation to every component.
    pub fn map_each(&self, mut f: impl FnMut(&[Complex64]) -> Vec<Complex64>) -> Self {
        Self {
            leakage: f(&self.leakage),
            direct: f(&self.direct),
            reflection: f(&self.reflection),
            noise: f(&self.noise),
            ..*self
        }
    }
}

/// Simulates reception of `tx` (unit-power baseband) through `geom`, keeping the path
/// classes separate. One entry per receive antenna.
///
/// Each path is delayed by a frequency-domain phase ramp, scaled, rotated by the carrier
/// phase `exp(-j 2 pi f_c tau(t))` evaluated per sample (which produces Doppler for moving
/// reflectors) and steered onto the array. Leakage is identical on every element. The
/// impairment profile is then applied, and noise at `noise_floor_dbm` per sample is added.
/// Output buffers have the same length as `tx`; pad the input to keep late echoes.
pub fn propagate_components(
    tx: &SampleBuffer,
    geom: &ScenarioGeometry,
    imp: &ImpairmentProfile,
    noise_floor_dbm: f64,
    radio: &RadioConfig,
    t0: f64,
    seed: u64,
) -> Result<Vec<RxComponents>> {
    geom.validate()?;
    let fs = tx.sample_rate();
    let len = tx.len();
    let n_ant = geom.array.n_elements;
    let snaps = geom
        .paths
        .iter()
        .map(|p| geom.snapshot(p, t0, radio))
        .collect::<Result<Vec<_>>>()?;
    let max_delay = snaps.iter().map(|s| s.delay).fold(0.0, f64::max);
    let m = (len + (max_delay * fs).ceil() as usize + 64).next_power_of_two();
    let mut spec = vec![Complex64::new(0.0, 0.0); m];
    spec[..len].copy_from_slice(tx.samples());
    fft_in_place(&mut spec);

    let mut out = vec![RxComponents::zeros(len, fs, t0); n_ant];
    let lambda = radio.wavelength();
    let fc = radio.carrier_freq();
    for (path, snap) in geom.paths.iter().zip(&snaps) {
        if snap.amplitude == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut y: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = if i < m / 2 {
                    i as f64
                } else {
                    i as f64 - m as f64
                } * fs
                    / m as f64;
                v * Complex64::from_polar(1.0, -2.0 * PI * f * snap.delay)
            })
            .collect();
        ifft_in_place(&mut y);
        y.truncate(len);

        let moving = path.trajectory.as_ref().is_some_and(|t| !t.is_static());
        if moving {
            for (n, v) in y.iter_mut().enumerate() {
                let tau = geom.snapshot(path, t0 + n as f64 / fs, radio)?.delay;
                *v *= snap.amplitude * Complex64::from_polar(1.0, -2.0 * PI * fc * tau);
            }
        } else {
            let g = snap.amplitude * Complex64::from_polar(1.0, -2.0 * PI * fc * snap.delay);
            for v in y.iter_mut() {
                *v *= g;
            }
        }

        let steer = match path.kind {
            PathKind::Leakage => vec![Complex64::new(1.0, 0.0); n_ant],
            _ => geom.array.steering(snap.sin_aoa, lambda),
        };
        for (ant, comp) in out.iter_mut().enumerate() {
            let target = match path.kind {
                PathKind::Leakage => &mut comp.leakage,
                PathKind::LineOfSight => &mut comp.direct,
                PathKind::Reflection => &mut comp.reflection,
            };
            for (acc, v) in target.iter_mut().zip(&y) {
                *acc += v * steer[ant];
            }
        }
    }

    let noise = ComplexGaussian::from_dbm(noise_floor_dbm)?;
    for (ant, comp) in out.iter_mut().enumerate() {
        if *imp != ImpairmentProfile::none() {
            *comp = comp.map_each(|x| imp.apply_time_domain(x, fs, t0));
        }
        let mut rng = rng_from_seed(derive_seed(seed, ant as u64));
        comp.noise = noise.samples(&mut rng, len);
    }
    Ok(out)
}

/// [`propagate_components`] summed into one buffer per antenna.
pub fn propagate(
    tx: &SampleBuffer,
    geom: &ScenarioGeometry,
    imp: &ImpairmentProfile,
    noise_floor_dbm: f64,
    radio: &RadioConfig,
    t0: f64,
    seed: u64,
) -> Result<Vec<SampleBuffer>> {
    propagate_components(tx, geom, imp, noise_floor_dbm, radio, t0, seed)?
        .iter()
        .map(RxComponents::to_buffer)
        .collect()
}
