use serde::{Deserialize, Serialize};

use super::{ChannelProfile, Grid};
use crate::error::{Error, Result};
use crate::pulses::GaussianParams;
use crate::C64;

/// Exponential coupling law `Ω(d) = Ω_ref·exp(−k(d − d_ref))`.
///
/// `Ω` is the rate entering the three-level Hamiltonian with the usual `Ω/2`
/// off-diagonal, so full power transfer between two identical guides takes
/// a length `π/Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingLaw {
    pub omega_ref: f64,
    pub d_ref: f64,
    pub k: f64,
}

impl CouplingLaw {
    pub fn omega(&self, d: f64) -> f64 {
        self.omega_ref * (-self.k * (d - self.d_ref)).exp()
    }

    /// Separation at which the coupling equals `omega`.
    pub fn separation_for(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "coupling must be positive, got {omega}"
            )));
        }
        Ok(self.d_ref - (omega / self.omega_ref).ln() / self.k)
    }
}

/// Parabolic separations that turn an exponential coupling law into Gaussian
/// pump and Stokes schedules. `t = z − z_center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct GaussianBend {
    pub d_min: f64,
    pub k: f64,
    pub T: f64,
    pub tau: f64,
    pub z_center: f64,
}

impl GaussianBend {
    /// Left (pump) separation; closest at `t = τ/2`.
    pub fn d_left(&self, z: f64) -> f64 {
        let t = z - self.z_center;
        self.d_min + (t - 0.5 * self.tau).powi(2) / (self.k * self.T * self.T)
    }

    /// Right (Stokes) separation; closest at `t = −τ/2`.
    pub fn d_right(&self, z: f64) -> f64 {
        let t = z - self.z_center;
        self.d_min + (t + 0.5 * self.tau).powi(2) / (self.k * self.T * self.T)
    }
}

/// Build the bend for pulses `p` given in length units, centred at `z_center`.
pub fn bend_from_gaussian_schedule(
    p: &GaussianParams,
    k: f64,
    d_min: f64,
    z_center: f64,
) -> Result<GaussianBend> {
    if !(k > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "k must be positive, got {k}"
        )));
    }
    Ok(GaussianBend {
        d_min,
        k,
        T: p.T,
        tau: p.tau,
        z_center,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Position {
    Fixed(f64),
    /// At `−d_left(z)`.
    BendLeft(GaussianBend),
    /// At `+d_right(z)`.
    BendRight(GaussianBend),
}

impl Position {
    pub fn at(&self, z: f64) -> f64 {
        match self {
            Position::Fixed(x) => *x,
            Position::BendLeft(b) => -b.d_left(z),
            Position::BendRight(b) => b.d_right(z),
        }
    }
}

/// One channel; its index is `Δn(x − x_c)(1 + i·loss)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub position: Position,
    pub loss: f64,
}

/// Channels ordered left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideLayout {
    pub channels: Vec<Channel>,
}

impl WaveguideLayout {
    pub fn single(loss: f64) -> Self {
        WaveguideLayout {
            channels: vec![Channel {
                position: Position::Fixed(0.0),
                loss,
            }],
        }
    }

    /// Two straight lossless guides `d` apart, centred on the origin.
    pub fn pair(d: f64) -> Self {
        WaveguideLayout {
            channels: vec![
                Channel {
                    position: Position::Fixed(-0.5 * d),
                    loss: 0.0,
                },
                Channel {
                    position: Position::Fixed(0.5 * d),
                    loss: 0.0,
                },
            ],
        }
    }

    /// Left guide lossy by `dn_i`, right guide with gain of the same size.
    pub fn three_guide(bend: GaussianBend, dn_i: f64) -> Self {
        WaveguideLayout {
            channels: vec![
                Channel {
                    position: Position::BendLeft(bend),
                    loss: dn_i,
                },
                Channel {
                    position: Position::Fixed(0.0),
                    loss: 0.0,
                },
                Channel {
                    position: Position::BendRight(bend),
                    loss: -dn_i,
                },
            ],
        }
    }

    pub fn centers(&self, z: f64) -> Vec<f64> {
        self.channels.iter().map(|c| c.position.at(z)).collect()
    }

    /// Reject overlapping channels at `z`.
    pub fn check_geometry(&self, channel: &ChannelProfile, z: f64) -> Result<()> {
        let c = self.centers(z);
        for w in c.windows(2) {
            if w[1] - w[0] < 2.0 * channel.w1 {
                return Err(Error::Geometry(format!(
                    "channels at {:.4} and {:.4} um overlap at z = {z} um (width {})",
                    w[0],
                    w[1],
                    2.0 * channel.w1
                )));
            }
        }
        Ok(())
    }
}

/// `V(x) = −Σ Δn(x − x_c)(1 + i·loss_c)` on `grid`.
pub fn build_potential(
    layout: &WaveguideLayout,
    channel: &ChannelProfile,
    grid: &Grid,
    z: f64,
) -> Result<Vec<C64>> {
    layout.check_geometry(channel, z)?;
    let mut v = vec![C64::new(0.0, 0.0); grid.n];
    fill_potential(layout, channel, grid, z, &mut v);
    Ok(v)
}

pub(super) fn fill_potential(
    layout: &WaveguideLayout,
    channel: &ChannelProfile,
    grid: &Grid,
    z: f64,
    v: &mut [C64],
) {
    v.fill(C64::new(0.0, 0.0));
    // The profile is below 1e-30 of its peak beyond 9 Dx from the edge.
    let reach = channel.w1 + 9.0 * channel.dx;
    let scale = channel.index_scale();
    for ch in &layout.channels {
        let xc = ch.position.at(z);
        let lo = (((xc - reach - grid.x0) / grid.dx).floor().max(0.0)) as usize;
        let hi = ((((xc + reach - grid.x0) / grid.dx).ceil()) as usize).min(grid.n);
        for (i, vi) in v.iter_mut().enumerate().take(hi).skip(lo) {
            let dn = channel.scaled_index(grid.x(i) - xc, scale);
            *vi -= C64::new(dn, dn * ch.loss);
        }
    }
}
