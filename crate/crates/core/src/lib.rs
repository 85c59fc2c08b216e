//! Heralded multi-phonon Fock states from forward Brillouin scattering.
//!
//! A single photon (or a faint laser pulse) injected into one resonance of an
//! equally spaced optical ladder Stokes-scatters downward, creating one phonon
//! per step. Detecting the photon in mode `-j` projects the phonon onto the
//! Fock state `|j⟩`. The crate provides
//!
//! * [`analytic`]: closed-form amplitudes, herald probabilities and the lossy
//!   density-matrix coefficients,
//! * [`integrator`]: independent ODE and dense-exponential oracles,
//! * [`herald`]: detector-array statistics and seeded Monte Carlo sampling,
//! * [`tomography`]: stop-band checks and beam-splitter readout pulses,
//! * [`experiments`]: the runners behind the `fbs-herald` binary.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod error;
pub mod experiments;
pub mod herald;
pub mod integrator;
pub mod ladder;
pub mod linalg;
pub mod output;
pub mod quadrature;
pub mod special;
pub mod tomography;

pub use config::{make_config, SystemConfig};
pub use error::{Error, Result};
pub use ladder::{choose_n_max, DensityBlock, LadderState};
