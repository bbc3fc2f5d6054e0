use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::music::{add_outer, pseudospectrum, top_peaks};
use crate::channel::AntennaArray;
use crate::error::{ensure, invalid, Result};
use crate::ofdm::CsiMatrix;

/// Angles from -90 to 90 degrees in `step` increments.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize;
    (0..=n).map(|i| -90.0 + i as f64 * step_deg).collect()
}

/// MUSIC over the antenna dimension using explicit per-antenna snapshots.
///
/// Returns `n_sources` angles (degrees from boresight), strongest pseudospectrum peak first.
pub fn aoa_music_snapshots(
    snapshots: &[Vec<Complex64>],
    array: &AntennaArray,
    wavelength: f64,
    n_sources: usize,
    grid_deg: &[f64],
) -> Result<Vec<f64>> {
    let m = array.n_elements;
    if n_sources == 0 || n_sources >= m {
        return invalid(format!(
            "{n_sources} sources cannot be resolved with {m} antennas"
        ));
    }
    ensure(!snapshots.is_empty(), || "no snapshots".to_string())?;
    ensure(snapshots.iter().all(|s| s.len() == m), || {
        format!("snapshots must have {m} entries")
    })?;
    ensure(!grid_deg.is_empty(), || "empty angle grid".to_string())?;
    let mut cov = DMatrix::<Complex64>::zeros(m, m);
    for s in snapshots {
        add_outer(&mut cov, s);
    }
    let (spectrum, _) = pseudospectrum(&cov, n_sources, grid_deg.len(), |i| {
        DVector::from_vec(array.steering(grid_deg[i].to_radians().sin(), wavelength))
    });
    Ok(top_peaks(&spectrum, n_sources)
        .into_iter()
        .map(|i| grid_deg[i])
        .collect())
}

/// MUSIC angle of arrival with one snapshot per subcarrier and packet (transmit antenna 0).
pub fn aoa_music(
    csi: &[CsiMatrix],
    array: &AntennaArray,
    wavelength: f64,
    n_sources: usize,
    grid_deg: &[f64],
) -> Result<Vec<f64>> {
    ensure(!csi.is_empty(), || "no CSI".to_string())?;
    ensure(csi.iter().all(|c| c.n_rx() == array.n_elements), || {
        format!("CSI must have {} receive antennas", array.n_elements)
    })?;
    let mut snapshots = Vec::new();
    for c in csi {
        for k in 0..c.subcarriers().len() {
            snapshots.push((0..c.n_rx()).map(|rx| c.get(rx, 0, k)).collect());
        }
    }
    aoa_music_snapshots(&snapshots, array, wavelength, n_sources, grid_deg)
}
