use num_complex::Complex64;

use crate::error::{ensure, Result};

/// A contiguous run of complex baseband samples taken at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<Complex64>,
    sample_rate: f64,
    start_time: f64,
}

impl SampleBuffer {
    /// Wraps `samples` taken at `sample_rate` Hz with the first sample at `start_time` seconds.
    ///
    /// Fails if the rate is not positive and finite, if the start time is not finite, or
    /// if any sample is NaN or infinite.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        ensure(sample_rate.is_finite() && sample_rate > 0.0, || {
            format!("sample rate must be positive and finite, got {sample_rate}")
        })?;
        ensure(start_time.is_finite(), || {
            format!("start time must be finite, got {start_time}")
        })?;
        if let Some(i) = samples
            .iter()
            .position(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return crate::error::invalid(format!("sample {i} is not finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
            start_time,
        })
    }

    /// A buffer of `len` zeros.
    pub fn zeros(len: usize, sample_rate: f64, start_time: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate, start_time)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `n` in seconds.
    pub fn time_of(&self, n: usize) -> f64 {
        self.start_time + n as f64 / self.sample_rate
    }

    /// Duration covered by the buffer in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean power per sample.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Returns a copy with `n` zeros appended.
    pub fn padded(&self, n: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.resize(self.samples.len() + n, Complex64::new(0.0, 0.0));
        Self { samples, ..*self }
    }

    /// Applies `f` to every sample, keeping rate and start time.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| f(s)).collect(),
            ..*self
        }
    }

    /// Sample-wise sum of two buffers of equal length and rate.
    pub fn add(&self, other: &SampleBuffer) -> Result<Self> {
        ensure(self.len() == other.len(), || {
            format!("length mismatch: {} vs {}", self.len(), other.len())
        })?;
        ensure(self.sample_rate == other.sample_rate, || {
            "sample rate mismatch".to_string()
        })?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            ..*self
        })
    }
}

/// Mean of |x|^2, zero for an empty slice.
pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

/// Sum of |x|^2.
pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|s| s.norm_sqr()).sum()
}
