use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// MUSIC pseudospectrum from a sample covariance.
///
/// Returns the spectrum over the candidates produced by `steering`, and whether the
/// covariance looked rank deficient (signal eigenvalues not clearly above the noise ones).
pub(crate) fn pseudospectrum(
    cov: &DMatrix<Complex64>,
    n_sources: usize,
    candidates: usize,
    steering: impl Fn(usize) -> DVector<Complex64>,
) -> (Vec<f64>, bool) {
    let m = cov.nrows();
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let weakest_signal = eig.eigenvalues[order[n_sources - 1]];
    let strongest_noise = eig.eigenvalues[order[n_sources]];
    let degraded = weakest_signal.is_nan()
        || weakest_signal <= 2.0 * strongest_noise.max(0.0)
        || weakest_signal <= 0.0;
    let noise = DMatrix::from_fn(m, m - n_sources, |r, c| {
        eig.eigenvectors[(r, order[n_sources + c])]
    });
    let spectrum = (0..candidates)
        .map(|i| {
            let a = steering(i);
            let proj = noise.adjoint() * &a;
            a.norm_squared() / proj.norm_squared().max(1e-300)
        })
        .collect();
    (spectrum, degraded)
}

/// Indices of the `n` largest local maxima, largest first.
pub(crate) fn top_peaks(spectrum: &[f64], n: usize) -> Vec<usize> {
    let len = spectrum.len();
    let mut peaks: Vec<usize> = (0..len)
        .filter(|&i| {
            let left = i == 0 || spectrum[i] >= spectrum[i - 1];
            let right = i + 1 == len || spectrum[i] > spectrum[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]));
    peaks.truncate(n);
    peaks
}

/// Quadratic refinement of a peak at `i` on a uniform grid, as a fractional index offset in [-0.5, 0.5].
pub(crate) fn parabolic_offset(y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return 0.0;
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let den = a - 2.0 * b + c;
    if den.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

/// Accumulates `x x^H` into `cov`.
pub(crate) fn add_outer(cov: &mut DMatrix<Complex64>, x: &[Complex64]) {
    for r in 0..x.len() {
        for c in 0..x.len() {
            cov[(r, c)] += x[r] * x[c].conj();
        }
    }
}
