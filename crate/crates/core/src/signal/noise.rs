use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, Result};

/// The random number generator used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Seeds a generator deterministically.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `seed` and `stream` into an independent child seed (splitmix64 finaliser).
///
/// Used to give every trial, antenna or packet its own reproducible random stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Circularly symmetric complex Gaussian noise with a given mean power.
#[derive(Debug, Clone, Copy)]
pub struct ComplexGaussian {
    normal: Normal<f64>,
    power: f64,
}

impl ComplexGaussian {
    /// Noise with mean power `power` (linear units, e.g. watts); each component has variance `power/2`.
    pub fn from_power(power: f64) -> Result<Self> {
        ensure(power.is_finite() && power >= 0.0, || {
            format!("noise power must be finite and non-negative, got {power}")
        })?;
        let normal = Normal::new(0.0, (power / 2.0).sqrt())
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        Ok(Self { normal, power })
    }

    /// Noise whose mean power corresponds to `dbm`.
    pub fn from_dbm(dbm: f64) -> Result<Self> {
        Self::from_power(dbm_to_watts(dbm))
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        Complex64::new(self.normal.sample(rng), self.normal.sample(rng))
    }

    pub fn samples<R: rand::Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// `n` samples of complex Gaussian noise with mean power `power`.
pub fn generate_noise<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    power: f64,
) -> Result<Vec<Complex64>> {
    Ok(ComplexGaussian::from_power(power)?.samples(rng, n))
}
