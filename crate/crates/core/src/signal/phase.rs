use std::f64::consts::PI;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    x - two_pi * ((x - PI) / two_pi).ceil()
}

/// Removes 2 pi jumps so that consecutive differences lie in `(-pi, pi]`.
///
/// Each output equals its input plus an integer multiple of 2 pi.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut turns = 0.0f64;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let d = p - phase[i - 1];
            turns += (wrap_phase(d) - d) / (2.0 * PI);
            turns = turns.round();
        }
        out.push(p + 2.0 * PI * turns);
    }
    out
}
