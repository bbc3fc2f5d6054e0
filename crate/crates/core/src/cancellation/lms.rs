use num_complex::Complex64;

/// Causal FIR filtering `y[n] = sum_i taps[i] x[n - i]`, output the same length as `x`.
pub fn fir_filter(taps: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    (0..x.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .take(n + 1)
                .map(|(i, &w)| w * x[n - i])
                .sum()
        })
        .collect()
}

/// Normalised least-mean-squares adaptive FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Nlms {
    pub taps: Vec<Complex64>,
    pub mu: f64,
    /// Regulariser added to the input energy in the normalisation.
    pub delta: f64,
}

impl Nlms {
    pub fn new(n_taps: usize, mu: f64) -> Self {
        Self {
            taps: vec![Complex64::new(0.0, 0.0); n_taps],
            mu,
            delta: 1e-12,
        }
    }

    /// One pass over `reference`/`desired`, adapting so that `taps * reference` tracks `desired`.
    ///
    /// Returns the a-priori error sequence.
    pub fn adapt(&mut self, reference: &[Complex64], desired: &[Complex64]) -> Vec<Complex64> {
        let l = self.taps.len();
        let mut window = vec![Complex64::new(0.0, 0.0); l];
        let mut energy = 0.0;
        let mut errors = Vec::with_capacity(desired.len());
        for (n, &d) in desired.iter().enumerate().take(reference.len()) {
            // Shift the newest sample in and keep the running input energy.
            energy -= window[l - 1].norm_sqr();
            window.rotate_right(1);
            window[0] = reference[n];
            energy += window[0].norm_sqr();
            let y: Complex64 = self.taps.iter().zip(&window).map(|(w, x)| w * x).sum();
            let e = d - y;
            let g = self.mu / (self.delta + energy.max(0.0));
            for (w, x) in self.taps.iter_mut().zip(&window) {
                *w += g * e * x.conj();
            }
            errors.push(e);
        }
        errors
    }
}
