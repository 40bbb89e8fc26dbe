//! Fourier-analytic detection of three-term arithmetic progressions in
//! random Cantor sets, Salem dissection sets and Brownian images.
//!
//! Floating point code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases fix the common choice. Cell bookkeeping, masses and triple counts
//! are exact.

pub mod ap;
pub mod brownian;
pub mod cantor;
pub mod convolution;
pub mod error;
pub mod measure;
pub mod rng;
pub mod salem;
pub mod scalar;
pub mod spectral;

pub use ap::{
    APWitness, brute_force_triples, count_nontrivial_triples, count_triples_conv, find_persistent_triples, lambda_vs_count,
};
pub use brownian::{
    BaseMeasure, BrownianEnsemble, BrownianPath, ap_probability, image_fourier, lambda_continuous,
    lambda_expectation_closed, moment_estimate, paley_zygmund_bound, sample_path,
};
pub use cantor::{ConstructionLog, Mode, construct, extend_level, select_block};
pub use error::{Error, Result};
pub use measure::{CantorParams, KMode, LevelApproximation, StepDensity};
pub use salem::{SalemParams, delta_s, pick_a, salem_fourier, window_average};
pub use scalar::Real;
pub use spectral::{FourierTable, Method, ball_condition, decay_condition, fourier_table, lambda_fourier};

pub type FourierTable64 = spectral::FourierTable<f64>;
pub type DecayReport64 = spectral::DecayReport<f64>;
pub type BrownianPath64 = brownian::BrownianPath<f64>;
