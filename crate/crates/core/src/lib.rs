//! Separation estimation for two partially coherent point sources.
//!
//! The crate computes the photon statistics of Hermite-Gaussian mode sorting
//! (SPADE) behind a Gaussian point-spread function, the resulting classical
//! Fisher information, the quantum Fisher information of the weak thermal
//! state, and a Monte Carlo harness that checks the Cramér–Rao bound.
//!
//! All numerical code is generic over a [`Real`] scalar (`f32` or `f64`).
//! The aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line tool uses.
//!
//! ```
//! use spade_fisher::{SourcePair, total_fisher};
//! use num_complex::Complex64;
//!
//! let model = SourcePair::new(1.0, 0.0, 1.0, Complex64::new(-0.5, 0.0)).unwrap();
//! let f = total_fisher(&model, 20).unwrap();
//! assert!((f - 0.75).abs() < 1e-12);
//! ```

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Small dense matrices read best indexed by position.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod coherence_map;
mod error;
pub mod numerics;
pub mod optics;
pub mod qfi;
mod scalar;
pub mod simulate;
pub mod spade;

pub use error::{Error, Result};
pub use scalar::Real;

pub use coherence_map::{dgamma_ds, gamma_of_p, p_of_gamma};
pub use optics::{hg_amplitudes, mutual_coherence, overlap_delta};
pub use qfi::{epsilon_of, j_correction, one_photon_qfi, total_per_photon_information};
pub use spade::{
    direct_imaging_fisher, fisher_curve, mode_fisher, mode_photon_number, total_fisher,
};

/// Two-source scene in double precision.
pub type SourcePair = optics::SourcePairModel<f64>;
/// Hermite-Gaussian overlap amplitudes in double precision.
pub type Amplitudes = optics::ModeAmplitudes<f64>;
/// Coherence parametrization in double precision.
pub type Coherence = spade::Coherence<f64>;
/// Fisher-information sweep in double precision.
pub type Report = spade::FisherReport<f64>;
/// Weak thermal state in double precision.
pub type WeakState = qfi::WeakSourceState<f64>;
/// Quantum Fisher information breakdown in double precision.
pub type Qfi = qfi::QfiReport<f64>;
/// Quadrature settings in double precision.
pub type Quadrature = numerics::QuadratureSpec<f64>;
/// Monte Carlo configuration in double precision.
pub type Trials = simulate::TrialConfig<f64>;
