//! End-to-end three-guide run: calibrate the coupling law, shape the bends
//! for a Gaussian schedule, propagate, and compare with the coupled-mode
//! model.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    bend_from_gaussian_schedule, bpm_propagate, calibrate_coupling, calibrate_loss,
    launch_superposition, mode_at, BpmConfig, BpmRun, ChannelProfile, CouplingCalibration,
    FieldEnvelope, GaussianBend, Grid, Launch, LossCalibration, OpticalParams, WaveguideLayout,
};
use crate::dynamics::{propagate, InitialState, PropagationConfig, Trajectory};
use crate::error::Result;
use crate::model::{mixing_angle, StateVector3};
use crate::pulses::{make_gaussian_pair, synthesize_gamma, GaussianParams, PulsePair};
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchState {
    /// All power in the left guide.
    Left,
    /// `cos θ |L⟩ − sin θ |R⟩` at the input.
    #[default]
    DarkState,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchShape {
    /// Gaussian fitted to the fundamental mode.
    Gaussian,
    /// The fundamental mode itself.
    #[default]
    Mode,
}

/// Parameters of a three-guide run; lengths in micrometres.
#[derive(Clone, Debug, PartialEq)]
#[allow(non_snake_case)]
pub struct GuideExperiment {
    pub optics: OpticalParams,
    /// `dn_i` is the starting point for loss calibration, or the value used
    /// when calibration is off.
    pub channel: ChannelProfile,
    /// Reference separation of the coupling law.
    pub d0: f64,
    pub T: f64,
    pub tau: f64,
    pub length: f64,
    /// Peak coupling times `T`. `None` places the closest approach at `d0`.
    pub omega0_t: Option<f64>,
    pub separations: Vec<f64>,
    pub calibration_length: f64,
    pub decay_length: f64,
    pub calibrate_loss: bool,
    pub loss_tolerance: f64,
    pub launch: LaunchState,
    pub shape: LaunchShape,
    pub grid: Grid,
    pub dz: f64,
    pub record_stride: usize,
}

impl Default for GuideExperiment {
    fn default() -> Self {
        GuideExperiment {
            optics: OpticalParams {
                lambda: 0.514,
                n_s: 2.33,
            },
            channel: ChannelProfile {
                dn0: 7e-3,
                w1: 2.0,
                dx: 2.0,
                dn_i: 0.0016,
            },
            d0: 5.95,
            T: 7000.0,
            tau: 7000.0,
            length: 70000.0,
            omega0_t: Some(1.3),
            separations: vec![5.95, 6.3, 6.65, 7.0],
            calibration_length: 20000.0,
            decay_length: 10000.0,
            calibrate_loss: true,
            loss_tolerance: 0.02,
            launch: LaunchState::DarkState,
            shape: LaunchShape::Mode,
            grid: BpmConfig::default_grid(),
            dz: 1.0,
            record_stride: 100,
        }
    }
}

/// Calibrated quantities shared by the Hermitian and NH runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSetup {
    pub coupling: CouplingCalibration,
    /// Peak coupling, 1/length.
    pub omega0: f64,
    pub d_min: f64,
    pub bend: GaussianBend,
    /// Target gain/loss rate `2τ/T²`, 1/length.
    pub gamma: f64,
    pub loss: Option<LossCalibration>,
    pub dn_i: f64,
    pub launch: Launch,
}

impl GuideExperiment {
    fn config(&self, z_max: f64) -> BpmConfig {
        BpmConfig::new(self.grid, z_max, self.dz).with_stride(self.record_stride)
    }

    fn pulses(&self, omega0: f64) -> Result<GaussianParams> {
        GaussianParams::new(omega0, self.T, self.tau)
    }

    /// Two-guide beat-length fit of the coupling law.
    pub fn calibrate(&self) -> Result<CouplingCalibration> {
        calibrate_coupling(
            &self.channel,
            &self.optics,
            &self.config(self.calibration_length),
            &self.separations,
            self.d0,
        )
    }

    pub fn prepare(&self) -> Result<ExperimentSetup> {
        let coupling = self.calibrate()?;
        let law = coupling.fit.law;
        let (omega0, d_min) = match self.omega0_t {
            Some(ot) => {
                let omega0 = ot / self.T;
                (omega0, law.separation_for(omega0)?)
            }
            None => (law.omega(self.d0), self.d0),
        };
        let params = self.pulses(omega0)?;
        let bend = bend_from_gaussian_schedule(&params, law.k, d_min, 0.5 * self.length)?;
        let gamma = params.gamma_constant();
        let loss = if self.calibrate_loss {
            Some(calibrate_loss(
                &self.channel,
                &self.optics,
                &self.config(self.decay_length),
                gamma,
                self.loss_tolerance,
            )?)
        } else {
            None
        };
        let dn_i = loss.map_or(self.channel.dn_i, |l| l.dn_i);
        let launch = Launch::fit(&self.channel.with_dn_i(0.0), &self.optics, &self.grid)?;
        Ok(ExperimentSetup {
            coupling,
            omega0,
            d_min,
            bend,
            gamma,
            loss,
            dn_i,
            launch,
        })
    }

    fn input_angle(&self, setup: &ExperimentSetup) -> Result<f64> {
        let pair = make_gaussian_pair(self.pulses(setup.omega0)?);
        let t = -0.5 * self.length;
        mixing_angle(pair.pump(t), pair.stokes(t))
    }

    /// Propagate the full structure; `nh` switches on the loss/gain pair.
    pub fn run(&self, setup: &ExperimentSetup, nh: bool) -> Result<BpmRun> {
        self.run_with_map(setup, nh, None)
    }

    /// [`run`](Self::run), also recording `|ψ|²` every `map_stride` steps.
    pub fn run_with_map(
        &self,
        setup: &ExperimentSetup,
        nh: bool,
        map_stride: Option<usize>,
    ) -> Result<BpmRun> {
        let dn_i = if nh { setup.dn_i } else { 0.0 };
        let layout = WaveguideLayout::three_guide(setup.bend, dn_i);
        let channel = self.channel.with_dn_i(dn_i);
        let centers = layout.centers(0.0);
        let parts = match self.launch {
            LaunchState::Left => vec![(centers[0], C64::new(1.0, 0.0))],
            LaunchState::DarkState => {
                let theta = self.input_angle(setup)?;
                vec![
                    (centers[0], C64::new(theta.cos(), 0.0)),
                    (centers[2], C64::new(-theta.sin(), 0.0)),
                ]
            }
        };
        let input = match self.shape {
            LaunchShape::Gaussian => launch_superposition(&setup.launch, &self.grid, &parts),
            LaunchShape::Mode => {
                let lossless = self.channel.with_dn_i(0.0);
                let mut input = FieldEnvelope::zeros(self.grid);
                for (c, a) in &parts {
                    let m = mode_at(&lossless, &self.optics, &self.grid, *c)?;
                    for (p, q) in input.psi.iter_mut().zip(&m.field.psi) {
                        *p += a * q;
                    }
                }
                let p = input.power();
                input.scale(1.0 / p.sqrt());
                input
            }
        };
        let mut cfg = self.config(self.length);
        if let Some(stride) = map_stride {
            cfg = cfg.with_map(stride);
        }
        bpm_propagate(&layout, &channel, &self.optics, &input, &cfg)
    }

    /// The matching three-level run in units of `T`.
    pub fn coupled_mode(&self, setup: &ExperimentSetup, nh: bool) -> Result<Trajectory> {
        let params = GaussianParams::new(setup.omega0 * self.T, 1.0, self.tau / self.T)?;
        let pair: Arc<dyn PulsePair> = Arc::new(make_gaussian_pair(params));
        let half = 0.5 * self.length / self.T;
        let cfg = PropagationConfig::new(-half, half, 1.0 / 2000.0, 1)?;
        let c0 = match self.launch {
            LaunchState::Left => StateVector3::basis(1),
            LaunchState::DarkState => InitialState::DarkState.resolve(pair.as_ref(), -half)?,
        };
        let gain = nh.then(|| synthesize_gamma(pair.clone()));
        propagate(pair.as_ref(), gain.as_ref(), &c0, &cfg)
    }

    /// Largest `|P_R(z) − P₃(t)|` over the recorded BPM samples, with
    /// `t = (z − L/2)/T`.
    pub fn max_deviation(&self, run: &BpmRun, traj: &Trajectory) -> f64 {
        run.samples
            .iter()
            .map(|s| {
                let t = (s.z - 0.5 * self.length) / self.T;
                (s.channels[2] - interpolate_p3(traj, t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Linear interpolation of `P₃` on the recorded times.
pub fn interpolate_p3(traj: &Trajectory, t: f64) -> f64 {
    let times = &traj.times;
    let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    let (p0, p1) = (traj.populations(i - 1)[2], traj.populations(i)[2]);
    let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    p0 + w * (p1 - p0)
}
