//! Sample containers and the spectral toolbox shared by every other module.

mod buffer;
mod fft;
mod noise;
mod nufft;
mod phase;
mod stft;

pub use buffer::{energy, mean_power, SampleBuffer};
pub use fft::{fft, fft_in_place, fftshift_freqs, ifft, ifft_in_place, spectrum};
pub use noise::{
    db_to_lin, dbm_to_watts, derive_seed, generate_noise, lin_to_db, rng_from_seed, watts_to_dbm,
    ComplexGaussian, SimRng,
};
pub use nufft::{nfft, nonuniform_dft, UniformGrid};
pub use phase::{unwrap_phase, wrap_phase};
pub use stft::{stft, stft_nonuniform, Spectrogram, Window};
