use rand::Rng;

use crate::error::{ensure, Result};
use crate::estimation::TxSchedule;
use crate::signal::rng_from_seed;

/// Bursty video-like traffic: one burst per frame interval with a random packet count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamingParams {
    pub burst_rate_hz: f64,
    pub min_burst: usize,
    pub max_burst: usize,
    /// Spacing of packets inside a burst, s.
    pub intra_gap_s: f64,
    /// Burst start jitter, uniform in `[0, jitter_s)`.
    pub jitter_s: f64,
}

impl Default for StreamingParams {
    fn default() -> Self {
        Self {
            burst_rate_hz: 30.0,
            min_burst: 1,
            max_burst: 8,
            intra_gap_s: 0.5e-3,
            jitter_s: 5e-3,
        }
    }
}

/// Sparse game-state updates: short bursts separated by Pareto-distributed gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamingParams {
    pub min_gap_s: f64,
    pub pareto_shape: f64,
    pub max_burst: usize,
    pub intra_gap_s: f64,
}

impl Default for GamingParams {
    fn default() -> Self {
        Self {
            min_gap_s: 10e-3,
            pareto_shape: 1.5,
            max_burst: 3,
            intra_gap_s: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficModel {
    Regular { rate_hz: f64 },
    Streaming(StreamingParams),
    Gaming(GamingParams),
}

impl TrafficModel {
    pub fn streaming() -> Self {
        TrafficModel::Streaming(StreamingParams::default())
    }

    pub fn gaming() -> Self {
        TrafficModel::Gaming(GamingParams::default())
    }

    pub fn label(&self) -> &'static str {
        match self {
            TrafficModel::Regular { .. } => "regular",
            TrafficModel::Streaming(_) => "streaming",
            TrafficModel::Gaming(_) => "gaming",
        }
    }
}

/// Packet generation times in `[0, duration)`, reproducible for a given seed.
pub fn generate_traffic(model: &TrafficModel, duration: f64, seed: u64) -> Result<TxSchedule> {
    ensure(duration > 0.0 && duration.is_finite(), || {
        "duration must be positive".to_string()
    })?;
    let mut rng = rng_from_seed(seed);
    let mut times: Vec<f64> = Vec::new();
    let push = |t: f64, times: &mut Vec<f64>| {
        // Keep the schedule strictly increasing when bursts run into each other.
        let t = match times.last() {
            Some(&last) if t <= last => last + 1e-6,
            _ => t,
        };
        if t < duration {
            times.push(t);
        }
    };
    match *model {
        TrafficModel::Regular { rate_hz } => {
            ensure(rate_hz > 0.0, || "rate must be positive".to_string())?;
            let n = (duration * rate_hz - 1e-9).ceil() as usize;
            for i in 0..n {
                push(i as f64 / rate_hz, &mut times);
            }
        }
        TrafficModel::Streaming(p) => {
            ensure(
                p.burst_rate_hz > 0.0 && p.min_burst >= 1 && p.max_burst >= p.min_burst,
                || "invalid streaming parameters".to_string(),
            )?;
            let n_bursts = (duration * p.burst_rate_hz).ceil() as usize;
            for b in 0..n_bursts {
                let start = b as f64 / p.burst_rate_hz + rng.random::<f64>() * p.jitter_s;
                let count = rng.random_range(p.min_burst..=p.max_burst);
                for i in 0..count {
                    push(start + i as f64 * p.intra_gap_s, &mut times);
                }
            }
        }
        TrafficModel::Gaming(p) => {
            ensure(
                p.min_gap_s > 0.0 && p.pareto_shape > 0.0 && p.max_burst >= 1,
                || "invalid gaming parameters".to_string(),
            )?;
            let mut t = 0.0;
            while t < duration {
                let count = rng.random_range(1..=p.max_burst);
                for i in 0..count {
                    push(t + i as f64 * p.intra_gap_s, &mut times);
                }
                let u: f64 = 1.0 - rng.random::<f64>();
                t += (count - 1) as f64 * p.intra_gap_s
                    + p.min_gap_s * u.powf(-1.0 / p.pareto_shape);
            }
        }
    }
    TxSchedule::new(times)
}

/// Coefficient of variation of the inter-packet gaps.
pub fn gap_cv(sched: &TxSchedule) -> f64 {
    let g = sched.gaps();
    if g.len() < 2 {
        return 0.0;
    }
    let n = g.len() as f64;
    let mean = g.iter().sum::<f64>() / n;
    let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_spacing() {
        let s = generate_traffic(&TrafficModel::Regular { rate_hz: 40.0 }, 10.0, 1).unwrap();
        assert_eq!(s.len(), 400);
        assert!(s.gaps().iter().all(|g| (g - 0.025).abs() < 1e-12));
    }

    #[test]
    fn streaming_is_reproducible() {
        let a = generate_traffic(&TrafficModel::streaming(), 10.0, 5).unwrap();
        let b = generate_traffic(&TrafficModel::streaming(), 10.0, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.len() > 300);
    }

    #[test]
    fn gaming_gaps_are_heavy_tailed() {
        let s = generate_traffic(&TrafficModel::gaming(), 60.0, 3).unwrap();
        assert!(gap_cv(&s) > 1.0, "{}", gap_cv(&s));
    }

    #[test]
    fn rejects_bad_duration() {
        assert!(generate_traffic(&TrafficModel::gaming(), 0.0, 1).is_err());
    }
}
