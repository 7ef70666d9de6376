//! Non-Hermitian shortcut to stimulated Raman adiabatic passage.
//!
//! The crate is organised around the pipeline a run goes through:
//!
//! * [`pulses`] builds pump/Stokes envelopes and synthesizes the balanced
//!   gain/loss rate `γ(t)` that cancels the nonadiabatic coupling.
//! * [`model`] holds the bare and adiabatic-frame three-level Hamiltonians.
//! * [`dynamics`] integrates the Schrödinger equation and checks the
//!   dark-state amplitude prediction.
//! * [`sweep`] scans parameter grids in parallel.
//! * [`bpm`] realizes the same physics as light in three coupled waveguides.
//!
//! Units: `ħ = 1` and all coupled-mode quantities are expressed in the pulse
//! width `T`. The waveguide module works in micrometres internally.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bpm;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod pulses;
pub mod sweep;

pub use num_complex::Complex64 as C64;

pub use dynamics::{
    fidelity, predict_dark_amplitudes, propagate, sensitivity_probe, DarkStatePrediction,
    InitialState, PropagationConfig, SensitivityReport, Trajectory,
};
pub use error::{Error, Result};
pub use model::{
    adiabatic_hamiltonian, bare_hamiltonian, dark_state, from_adiabatic, mixing_angle,
    rotation_matrix, to_adiabatic, AdiabaticAmplitudes, AdiabaticFrame, Hamiltonian3, StateVector3,
};
pub use pulses::{
    make_gaussian_pair, make_sech_pair, synthesize_gamma, GainProfile, GaussianParams, PulsePair,
    SechParams, SharedPair,
};
