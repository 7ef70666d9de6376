//! Scalar paraxial beam propagation through evanescently coupled channel
//! waveguides.
//!
//! Lengths are in micrometres and rates in inverse micrometres throughout.
//! The field obeys `iƛ ∂ψ/∂z = −(ƛ²/2nₛ) ∂²ψ/∂x² + V(x, z) ψ` with
//! `ƛ = λ/2π` and `V = −Δn`, so a positive imaginary index fraction on a
//! channel is loss and a negative one is gain.

mod calibrate;
mod experiment;
mod layout;
mod mode;
mod propagate;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

pub use calibrate::{
    calibrate_coupling, calibrate_loss, fit_exponential, measure_decay_rate, CouplingCalibration,
    ExponentialFit, LossCalibration,
};
pub use experiment::{interpolate_p3, ExperimentSetup, GuideExperiment, LaunchShape, LaunchState};
pub use layout::{
    bend_from_gaussian_schedule, build_potential, Channel, CouplingLaw, GaussianBend, Position,
    WaveguideLayout,
};
pub use mode::{
    fundamental_mode, gaussian_overlap, launch_field, launch_superposition, mode_at, Launch, Mode,
};
pub use propagate::{bpm_propagate, BpmConfig, BpmRun, FieldMap, PowerSample, TRACE_HEADER};

use crate::error::{Error, Result};
use crate::C64;

/// Error-function channel: a diffused stripe of half width `w1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub dn0: f64,
    pub w1: f64,
    /// Diffusion length.
    pub dx: f64,
    /// Imaginary index as a fraction of the real profile.
    pub dn_i: f64,
}

impl ChannelProfile {
    pub fn new(dn0: f64, w1: f64, dx: f64, dn_i: f64) -> Result<Self> {
        if !(dn0 > 0.0 && w1 > 0.0 && dx > 0.0) || !dn_i.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "channel needs dn0, w1, Dx > 0 (dn0 = {dn0}, w1 = {w1}, Dx = {dx}, dnI = {dn_i})"
            )));
        }
        Ok(ChannelProfile { dn0, w1, dx, dn_i })
    }

    pub fn with_dn_i(mut self, dn_i: f64) -> Self {
        self.dn_i = dn_i;
        self
    }

    /// `Δn(x)` for a channel centred at the origin.
    pub fn index(&self, x: f64) -> f64 {
        self.scaled_index(x, self.index_scale())
    }

    pub(crate) fn scaled_index(&self, x: f64, scale: f64) -> f64 {
        scale * (erf((x + self.w1) / self.dx) - erf((x - self.w1) / self.dx))
    }

    pub(crate) fn index_scale(&self) -> f64 {
        self.dn0 / (2.0 * erf(self.w1 / self.dx))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    /// Wavelength, micrometres.
    pub lambda: f64,
    pub n_s: f64,
}

impl OpticalParams {
    pub fn new(lambda: f64, n_s: f64) -> Result<Self> {
        if !(lambda > 0.0 && n_s > 1.0) {
            return Err(Error::ParameterDomain(format!(
                "optics need lambda > 0 and n_s > 1 (lambda = {lambda}, n_s = {n_s})"
            )));
        }
        Ok(OpticalParams { lambda, n_s })
    }

    /// `ƛ = λ/2π`.
    pub fn reduced_wavelength(&self) -> f64 {
        self.lambda / std::f64::consts::TAU
    }
}

/// Uniform transverse grid `x_i = x0 + i·dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width > 0.0 && dx > 0.0) {
            return Err(Error::Grid(format!(
                "need half_width, dx > 0 (got {half_width}, {dx})"
            )));
        }
        let n = (2.0 * half_width / dx).round() as usize;
        if n < 16 {
            return Err(Error::Grid(format!("only {n} samples")));
        }
        Ok(Grid {
            x0: -half_width,
            dx,
            n,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }
}

/// Sampled complex envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldEnvelope {
    pub grid: Grid,
    pub psi: Vec<C64>,
}

impl FieldEnvelope {
    pub fn zeros(grid: Grid) -> Self {
        FieldEnvelope {
            grid,
            psi: vec![C64::new(0.0, 0.0); grid.n],
        }
    }

    /// `∫|ψ|² dx`.
    pub fn power(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    /// Power of the samples with `lo <= x < hi`.
    pub fn power_between(&self, lo: f64, hi: f64) -> f64 {
        self.grid
            .xs()
            .zip(&self.psi)
            .filter(|(x, _)| *x >= lo && *x < hi)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * self.grid.dx
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.psi {
            *z *= factor;
        }
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Power within `center ± half_window`, relative to `reference_power`.
pub fn extract_waveguide_power(
    field: &FieldEnvelope,
    center: f64,
    half_window: f64,
    reference_power: f64,
) -> f64 {
    field.power_between(center - half_window, center + half_window) / reference_power
}

/// Extraction windows around sorted channel centres.
///
/// Each window is `center ± (w1 + 2Dx)`, clipped at the midpoint to the
/// neighbouring channel so that no sample is counted twice.
pub fn power_windows(centers: &[f64], channel: &ChannelProfile) -> Vec<(f64, f64)> {
    let half = channel.w1 + 2.0 * channel.dx;
    (0..centers.len())
        .map(|i| {
            let c = centers[i];
            let mut lo = c - half;
            let mut hi = c + half;
            if i > 0 {
                lo = lo.max(0.5 * (centers[i - 1] + c));
            }
            if i + 1 < centers.len() {
                hi = hi.min(0.5 * (c + centers[i + 1]));
            }
            (lo, hi)
        })
        .collect()
}
