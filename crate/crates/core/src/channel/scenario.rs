use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{
    AntennaArray, AntennaGains, ImpairmentProfile, PathKind, Point3, PropagationPath,
    ScenarioGeometry, Trajectory,
};
use crate::error::{Error, Result};
use crate::ofdm::RadioConfig;
use crate::signal::{dbm_to_watts, rng_from_seed};

/// Everything needed to simulate one link, as read from a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub radio: RadioConfig,
    pub geometry: ScenarioGeometry,
    pub impairments: ImpairmentProfile,
    pub noise_floor_dbm: f64,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    seed: Option<u64>,
    noise_floor_dbm: Option<f64>,
    tx_power_dbm: Option<f64>,
    radio: Option<RadioSection>,
    tx: Option<TxSection>,
    rx: Option<RxSection>,
    impairments: Option<ImpairmentSection>,
    #[serde(default)]
    paths: Vec<PathSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioSection {
    carrier_freq_hz: Option<f64>,
    sample_rate_hz: Option<f64>,
    fft_size: Option<usize>,
    cp_len: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TxSection {
    position: [f64; 3],
    gain: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RxSection {
    position: [f64; 3],
    heading_deg: Option<f64>,
    n_antennas: Option<usize>,
    spacing_m: Option<f64>,
    gain: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImpairmentSection {
    cfo_hz: Option<f64>,
    cpo_rad: Option<f64>,
    sfo: Option<f64>,
    pdd_samples: Option<f64>,
    /// Draw CFO/SFO within this many ppm (and a random CPO) from the scenario seed.
    random_ppm: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum KindName {
    Leakage,
    Los,
    Reflection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSection {
    kind: KindName,
    rcs: Option<f64>,
    amplitude: Option<[f64; 2]>,
    delay_s: Option<f64>,
    aoa_deg: Option<f64>,
    trajectory: Option<TrajectorySection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
enum TrajectorySection {
    Static {
        position: [f64; 3],
    },
    Linear {
        start: [f64; 3],
        velocity: [f64; 3],
    },
    Breathing {
        center: [f64; 3],
        direction: [f64; 3],
    },
    Oscillating {
        center: [f64; 3],
        direction: [f64; 3],
        amplitude_m: f64,
        rate_hz: f64,
    },
}

fn p3(v: [f64; 3]) -> Point3 {
    Point3::new(v[0], v[1], v[2])
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Parses a TOML scenario description.
///
/// ```toml
/// seed = 7
/// noise_floor_dbm = -90.0
/// tx_power_dbm = 20.0
/// [tx]
/// position = [0.0, 0.0, 0.0]
/// [rx]
/// position = [2.0, 0.0, 0.0]
/// heading_deg = 180.0
/// [impairments]
/// random_ppm = 20.0
/// [[paths]]
/// kind = "los"
/// [[paths]]
/// kind = "reflection"
/// rcs = 1.0
/// trajectory = { type = "breathing", center = [1.0, 1.5, 0.0], direction = [0.0, 1.0, 0.0] }
/// ```
///
/// Omitting `rx` places the receiver on the transmitter (monostatic).
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let f: File = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let seed = f.seed.unwrap_or(0);
    let radio = match f.radio {
        None => RadioConfig::default(),
        Some(r) => RadioConfig::new(
            r.carrier_freq_hz.unwrap_or(2.4e9),
            r.sample_rate_hz.unwrap_or(20e6),
            r.fft_size.unwrap_or(64),
            r.cp_len.unwrap_or(16),
        )?,
    };
    let tx_pos =
        f.tx.as_ref()
            .map(|t| p3(t.position))
            .unwrap_or_else(Point3::zeros);
    let mut array = AntennaArray::half_wavelength(tx_pos, 0.0, &radio);
    let mut gains = AntennaGains::default();
    if let Some(t) = &f.tx {
        gains.tx = t.gain.unwrap_or(1.0);
    }
    if let Some(r) = &f.rx {
        array.position = p3(r.position);
        array.heading_deg = r.heading_deg.unwrap_or(0.0);
        array.n_elements = r.n_antennas.unwrap_or(3);
        array.spacing = r.spacing_m.unwrap_or(radio.wavelength() / 2.0);
        gains.rx = r.gain.unwrap_or(1.0);
    }
    let impairments = match f.impairments {
        None => ImpairmentProfile::none(),
        Some(i) => {
            let base = match i.random_ppm {
                Some(ppm) => ImpairmentProfile::random_boot(&mut rng_from_seed(seed), &radio, ppm),
                None => ImpairmentProfile::none(),
            };
            ImpairmentProfile::new(
                i.cfo_hz.unwrap_or(base.cfo_hz),
                i.cpo_rad.unwrap_or(base.cpo_rad),
                i.sfo.unwrap_or(base.sfo),
                i.pdd_samples.unwrap_or(0.0),
            )?
        }
    };
    let mut paths = Vec::with_capacity(f.paths.len());
    for (i, p) in f.paths.into_iter().enumerate() {
        let trajectory = p.trajectory.map(|t| match t {
            TrajectorySection::Static { position } => Trajectory::Static(p3(position)),
            TrajectorySection::Linear { start, velocity } => Trajectory::Linear {
                start: p3(start),
                velocity: p3(velocity),
            },
            TrajectorySection::Breathing { center, direction } => {
                Trajectory::breathing(p3(center), p3(direction))
            }
            TrajectorySection::Oscillating {
                center,
                direction,
                amplitude_m,
                rate_hz,
            } => Trajectory::Oscillating {
                center: p3(center),
                direction: p3(direction).normalize(),
                amplitude: amplitude_m,
                rate_hz,
            },
        });
        let amplitude = p.amplitude.map(|a| Complex64::new(a[0], a[1]));
        let path = match p.kind {
            KindName::Los => PropagationPath::line_of_sight(),
            KindName::Leakage => PropagationPath::leakage(
                p.delay_s.unwrap_or(0.0),
                amplitude
                    .ok_or_else(|| parse_err(format!("path {i}: leakage needs an amplitude")))?,
            ),
            KindName::Reflection => match (trajectory, amplitude, p.rcs) {
                (Some(t), Some(a), _) => PropagationPath::reflector_with_amplitude(t, a),
                (Some(t), None, Some(rcs)) => PropagationPath::reflector(t, rcs),
                (None, Some(a), _) => PropagationPath::fixed(
                    PathKind::Reflection,
                    p.delay_s.unwrap_or(0.0),
                    a,
                    p.aoa_deg.unwrap_or(0.0),
                ),
                _ => {
                    return Err(parse_err(format!(
                        "path {i}: reflection needs a trajectory with rcs, or an amplitude"
                    )))
                }
            },
        };
        paths.push(path);
    }
    let geometry = ScenarioGeometry {
        tx_pos,
        array,
        tx_power_w: dbm_to_watts(f.tx_power_dbm.unwrap_or(20.0)),
        gains,
        paths,
    };
    geometry.validate()?;
    Ok(Scenario {
        radio,
        geometry,
        impairments,
        noise_floor_dbm: f.noise_floor_dbm.unwrap_or(-90.0),
        seed,
    })
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
