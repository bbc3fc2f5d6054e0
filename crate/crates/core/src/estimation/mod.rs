//! Channel-feature estimation: an ADMM lasso over a nonuniform delay/Doppler dictionary,
//! IFFT and MUSIC ranging, FFT and sparse velocity, MUSIC angle of arrival and
//! single-device localization.

mod admm;
mod aoa;
mod localize;
mod music;
mod operator;
mod ranging;
mod sparse;
mod velocity;

pub use admm::{
    admm_lasso, default_lambda, lasso_objective, soft_threshold, AdmmOptions, AdmmResult,
};
pub use aoa::{angle_grid, aoa_music, aoa_music_snapshots};
pub use localize::{
    atom_response, localize_single, sense_target, steering_search, Pose, SensingEstimate,
};
pub use operator::{DenseOperator, FnOperator, KroneckerOperator, LinearOperator};
pub use ranging::{
    delay_to_range, estimate_path_count, ifft_delay_profile, mdl_order, range_ifft, range_music,
    MusicRanging,
};
pub use sparse::{
    estimate_features_sparse, feature_operator, refine_atom, velocity_sparse, Atom, FeatureGrid,
    FeatureVector, SparseOptions, TxSchedule,
};
pub use velocity::{doppler_spectrum, sparse_spectrogram, velocity_fft, velocity_fft_naive};
