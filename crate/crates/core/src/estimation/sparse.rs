use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{admm_lasso, default_lambda, AdmmOptions, KroneckerOperator, LinearOperator};
use crate::error::{ensure, invalid, Result};
use crate::ofdm::{CsiMatrix, RadioConfig};

/// Transmit times of a packet stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSchedule {
    times: Vec<f64>,
    packet_ids: Vec<u64>,
}

impl TxSchedule {
    /// Times must be finite and strictly increasing; ids are assigned 0, 1, ...
    pub fn new(times: Vec<f64>) -> Result<Self> {
        let ids = (0..times.len() as u64).collect();
        Self::with_ids(times, ids)
    }

    pub fn with_ids(times: Vec<f64>, packet_ids: Vec<u64>) -> Result<Self> {
        ensure(times.len() == packet_ids.len(), || {
            "one id per packet required".to_string()
        })?;
        ensure(times.iter().all(|t| t.is_finite()), || {
            "transmit times must be finite".to_string()
        })?;
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return invalid(format!(
                "transmit times not strictly increasing at index {}",
                i + 1
            ));
        }
        Ok(Self { times, packet_ids })
    }

    /// `n` packets at exactly `rate_hz` starting at `start`.
    pub fn regular(rate_hz: f64, n: usize, start: f64) -> Result<Self> {
        ensure(rate_hz > 0.0, || "rate must be positive".to_string())?;
        Self::new((0..n).map(|i| start + i as f64 / rate_hz).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn packet_ids(&self) -> &[u64] {
        &self.packet_ids
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Whether every gap is within `rel_tol` of the mean gap.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let g = self.gaps();
        if g.is_empty() {
            return true;
        }
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        g.iter().all(|x| (x - mean).abs() <= rel_tol * mean)
    }

    /// Packets per second over the span of the schedule.
    pub fn mean_rate(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) if b > a => (self.times.len() - 1) as f64 / (b - a),
            _ => 0.0,
        }
    }
}

/// Candidate delays (s) and Doppler frequencies (Hz) of the sparse dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub delays: Vec<f64>,
    pub dopplers: Vec<f64>,
}

impl FeatureGrid {
    /// Delays `0..=delay_max` and Dopplers `-doppler_max..=doppler_max` on the given steps.
    pub fn new(
        delay_max: f64,
        delay_step: f64,
        doppler_max: f64,
        doppler_step: f64,
    ) -> Result<Self> {
        ensure(delay_step > 0.0 && delay_max >= 0.0, || {
            "invalid delay grid".to_string()
        })?;
        ensure(doppler_step > 0.0 && doppler_max >= 0.0, || {
            "invalid Doppler grid".to_string()
        })?;
        let nd = (delay_max / delay_step + 1e-9).floor() as usize + 1;
        let nf = (doppler_max / doppler_step + 1e-9).floor() as usize;
        Ok(Self {
            delays: (0..nd).map(|i| i as f64 * delay_step).collect(),
            dopplers: (-(nf as i64)..=nf as i64)
                .map(|i| i as f64 * doppler_step)
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len() * self.dopplers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for FeatureGrid {
    fn default() -> Self {
        Self::new(500e-9, 5e-9, 60.0, 0.25).expect("valid default grid")
    }
}

/// Solver settings of the sparse estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseOptions {
    /// Regulariser as a fraction of `||A^H y||_inf`.
    pub lambda_frac: f64,
    /// ADMM penalty; `None` scales it to the dictionary.
    pub rho: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    /// Antenna pair whose CSI is used.
    pub rx: usize,
    pub tx: usize,
}

impl Default for SparseOptions {
    fn default() -> Self {
        Self {
            lambda_frac: 0.1,
            rho: None,
            max_iter: 300,
            tol: 1e-5,
            rx: 0,
            tx: 0,
        }
    }
}

/// One dictionary entry with its recovered coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub delay: f64,
    pub doppler: f64,
    pub amplitude: Complex64,
}

/// Sparse coefficients over a [`FeatureGrid`], row-major (delay, Doppler).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub grid: FeatureGrid,
    pub coefficients: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
}

impl FeatureVector {
    pub fn get(&self, delay_idx: usize, doppler_idx: usize) -> Complex64 {
        self.coefficients[delay_idx * self.grid.dopplers.len() + doppler_idx]
    }

    /// Non-zero atoms with magnitude at least `rel_threshold` of the largest, strongest first.
    pub fn atoms(&self, rel_threshold: f64) -> Vec<Atom> {
        let nf = self.grid.dopplers.len();
        let max = self
            .coefficients
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if max == 0.0 {
            return Vec::new();
        }
        let mut out: Vec<Atom> = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0 && v.norm() >= rel_threshold * max)
            .map(|(i, &v)| Atom {
                delay: self.grid.delays[i / nf],
                doppler: self.grid.dopplers[i % nf],
                amplitude: v,
            })
            .collect();
        out.sort_by(|a, b| b.amplitude.norm().total_cmp(&a.amplitude.norm()));
        out
    }

    /// Strongest atom overall.
    pub fn dominant(&self) -> Option<Atom> {
        self.atoms(0.0).into_iter().next()
    }

    /// Strongest atom whose Doppler magnitude reaches `min_doppler` (Hz), i.e. a moving reflector.
    pub fn strongest_moving(&self, min_doppler: f64) -> Option<Atom> {
        self.atoms(0.0)
            .into_iter()
            .find(|a| a.doppler.abs() >= min_doppler)
    }

    /// Coefficient energy per delay bin, summed over Doppler.
    pub fn delay_profile(&self) -> Vec<f64> {
        let nf = self.grid.dopplers.len();
        self.coefficients
            .chunks(nf)
            .map(|row| row.iter().map(|v| v.norm_sqr()).sum())
            .collect()
    }

    /// Coefficient energy per Doppler bin, summed over delay.
    pub fn doppler_profile(&self) -> Vec<f64> {
        let nf = self.grid.dopplers.len();
        let mut out = vec![0.0; nf];
        for (i, v) in self.coefficients.iter().enumerate() {
            out[i % nf] += v.norm_sqr();
        }
        out
    }
}

/// Delay/Doppler dictionary over the CSI of `csi_series` at the schedule's transmit times.
///
/// Entry `(k, l)` of atom `(tau, nu)` is `exp(-j 2 pi k df tau) exp(j 2 pi nu (T_l - T_0))`;
/// the carrier term `exp(-j 2 pi f_c tau)` is constant per atom and absorbed into its coefficient.
pub fn feature_operator(
    subcarriers: &[i32],
    times: &[f64],
    cfg: &RadioConfig,
    grid: &FeatureGrid,
) -> Result<KroneckerOperator> {
    ensure(!grid.is_empty(), || "empty feature grid".to_string())?;
    let df = cfg.subcarrier_spacing();
    let t0 = times.first().copied().unwrap_or(0.0);
    let a_tau = DMatrix::from_fn(subcarriers.len(), grid.delays.len(), |k, i| {
        Complex64::from_polar(1.0, -2.0 * PI * subcarriers[k] as f64 * df * grid.delays[i])
    });
    let a_nu = DMatrix::from_fn(times.len(), grid.dopplers.len(), |l, j| {
        Complex64::from_polar(1.0, 2.0 * PI * grid.dopplers[j] * (times[l] - t0))
    });
    KroneckerOperator::new(a_tau, a_nu)
}

/// CSI of one antenna pair stacked subcarrier-major, matching [`feature_operator`].
fn stacked(csi_series: &[CsiMatrix], opts: &SparseOptions) -> Vec<Complex64> {
    let n_pkt = csi_series.len();
    let n_sc = csi_series[0].subcarriers().len();
    let mut y = vec![Complex64::new(0.0, 0.0); n_sc * n_pkt];
    for (l, c) in csi_series.iter().enumerate() {
        for (k, v) in c.row(opts.rx, opts.tx).iter().enumerate() {
            y[k * n_pkt + l] = *v;
        }
    }
    y
}

/// Recovers sparse delay/Doppler features from CSI captured at irregular transmit times.
///
/// The CSI of one antenna pair over all packets is fitted with the nonuniform dictionary of
/// [`feature_operator`] by an L1-penalised least-squares solve. Each CSI timestamp must lie
/// within 1 ms of its scheduled transmit time.
pub fn estimate_features_sparse(
    csi_series: &[CsiMatrix],
    sched: &TxSchedule,
    cfg: &RadioConfig,
    grid: &FeatureGrid,
    opts: &SparseOptions,
) -> Result<FeatureVector> {
    ensure(!csi_series.is_empty(), || "empty CSI series".to_string())?;
    ensure(csi_series.len() == sched.len(), || {
        format!(
            "{} CSI entries for {} scheduled packets",
            csi_series.len(),
            sched.len()
        )
    })?;
    for (c, t) in csi_series.iter().zip(sched.times()) {
        ensure((c.timestamp - t).abs() <= 1e-3, || {
            format!(
                "CSI timestamp {} does not match scheduled time {t}",
                c.timestamp
            )
        })?;
    }
    let first = &csi_series[0];
    ensure(opts.rx < first.n_rx() && opts.tx < first.n_tx(), || {
        "antenna pair out of range".to_string()
    })?;
    let subcarriers = first.subcarriers().to_vec();
    ensure(
        csi_series
            .iter()
            .all(|c| c.subcarriers() == subcarriers.as_slice()),
        || "all CSI entries must share one subcarrier set".to_string(),
    )?;
    let op = feature_operator(&subcarriers, sched.times(), cfg, grid)?;
    let y = stacked(csi_series, opts);
    let lambda = default_lambda(&op, &y, opts.lambda_frac);
    if lambda == 0.0 {
        return Ok(FeatureVector {
            grid: grid.clone(),
            coefficients: vec![Complex64::new(0.0, 0.0); grid.len()],
            converged: true,
            iterations: 0,
        });
    }
    let res = admm_lasso(
        &op,
        &y,
        &AdmmOptions {
            lambda,
            rho: opts.rho,
            max_iter: opts.max_iter,
            tol: opts.tol,
            adaptive_rho: false,
        },
    )?;
    Ok(FeatureVector {
        grid: grid.clone(),
        coefficients: res.x,
        converged: res.converged,
        iterations: res.iterations,
    })
}

/// Normalised dictionary correlation above which an atom counts as part of the refined one.
const NEIGHBOUR_COHERENCE: f64 = 0.3;

/// Moves `atom` off the grid: every recovered atom not coherent with it is subtracted from the CSI and the
/// single-atom matched filter of the residual is maximised over a fine local search within
/// one grid step in delay and Doppler. The amplitude is re-fitted at the refined point.
///
/// `csi_series` and `sched` must be the ones `fv` was estimated from.
pub fn refine_atom(
    csi_series: &[CsiMatrix],
    sched: &TxSchedule,
    cfg: &RadioConfig,
    fv: &FeatureVector,
    atom: &Atom,
    opts: &SparseOptions,
) -> Result<Atom> {
    ensure(
        !csi_series.is_empty() && csi_series.len() == sched.len(),
        || "CSI series and schedule must be non-empty and of equal length".to_string(),
    )?;
    let subcarriers = csi_series[0].subcarriers().to_vec();
    let times = sched.times();
    let op = feature_operator(&subcarriers, times, cfg, &fv.grid)?;
    ensure(fv.coefficients.len() == op.cols(), || {
        "feature vector does not match its grid".to_string()
    })?;
    let step = |v: &[f64]| {
        if v.len() > 1 {
            (v[1] - v[0]).abs()
        } else {
            0.0
        }
    };
    let (d_step, f_step) = (step(&fv.grid.delays), step(&fv.grid.dopplers));
    let df = cfg.subcarrier_spacing();
    // An off-grid path spreads over every atom that correlates with it, so all atoms coherent
    // with the chosen one stay in the residual.
    let t0 = times[0];
    let coherence = |tau: f64, nu: f64| -> f64 {
        let d: Complex64 = subcarriers
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * df * (tau - atom.delay)))
            .sum();
        let f: Complex64 = times
            .iter()
            .map(|t| Complex64::from_polar(1.0, 2.0 * PI * (nu - atom.doppler) * (t - t0)))
            .sum();
        d.norm() / subcarriers.len() as f64 * f.norm() / times.len() as f64
    };
    let nf = fv.grid.dopplers.len();
    let mut others = fv.coefficients.clone();
    for (i, c) in others.iter_mut().enumerate() {
        if c.norm() > 0.0
            && coherence(fv.grid.delays[i / nf], fv.grid.dopplers[i % nf]) >= NEIGHBOUR_COHERENCE
        {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    let fitted = op.apply(&others);
    let residual: Vec<Complex64> = stacked(csi_series, opts)
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();

    let n_pkt = times.len();
    // Correlation against one atom; the Doppler sum is done once per delay.
    let score = |tau: f64, nu: f64| -> Complex64 {
        let rot: Vec<Complex64> = times
            .iter()
            .map(|t| Complex64::from_polar(1.0, -2.0 * PI * nu * (t - t0)))
            .collect();
        subcarriers
            .iter()
            .enumerate()
            .map(|(k, &sc)| {
                let row = &residual[k * n_pkt..(k + 1) * n_pkt];
                let s: Complex64 = row.iter().zip(&rot).map(|(r, w)| r * w).sum();
                s * Complex64::from_polar(1.0, 2.0 * PI * sc as f64 * df * tau)
            })
            .sum()
    };
    const POINTS: i32 = 10;
    let mut best = (atom.delay, atom.doppler, score(atom.delay, atom.doppler));
    for i in -POINTS..=POINTS {
        for j in -POINTS..=POINTS {
            let tau = atom.delay + d_step * i as f64 / POINTS as f64;
            let nu = atom.doppler + f_step * j as f64 / POINTS as f64;
            let c = score(tau, nu);
            if c.norm() > best.2.norm() {
                best = (tau, nu, c);
            }
        }
    }
    Ok(Atom {
        delay: best.0,
        doppler: best.1,
        amplitude: best.2 / residual.len() as f64,
    })
}

/// Radial velocity (m/s, positive approaching) of the dominant sparse Doppler atom, monostatic.
pub fn velocity_sparse(
    csi_series: &[CsiMatrix],
    sched: &TxSchedule,
    cfg: &RadioConfig,
    grid: &FeatureGrid,
    opts: &SparseOptions,
) -> Result<f64> {
    ensure(csi_series.len() >= 8, || {
        format!("need at least 8 packets, got {}", csi_series.len())
    })?;
    let fv = estimate_features_sparse(csi_series, sched, cfg, grid, opts)?;
    Ok(fv
        .dominant()
        .map_or(0.0, |a| a.doppler * cfg.wavelength() / 2.0))
}
