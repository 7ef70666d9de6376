use rustfft::FftPlanner;

use super::{ChannelProfile, FieldEnvelope, Grid, OpticalParams};
use crate::error::{Error, Result};
use crate::C64;

/// Fundamental guided mode of an isolated channel.
#[derive(Clone, Debug)]
pub struct Mode {
    /// Real, positive, unit power.
    pub field: FieldEnvelope,
    /// Propagation-constant shift, 1/length.
    pub beta: f64,
}

const MODE_STEP: f64 = 0.5;
const MODE_MAX_STEPS: usize = 200_000;
const MODE_TOL: f64 = 1e-12;

/// Imaginary-distance propagation of a trial Gaussian on the single
/// lossless channel, renormalised each step, until the field stops changing.
pub fn fundamental_mode(
    channel: &ChannelProfile,
    optics: &OpticalParams,
    grid: &Grid,
) -> Result<Mode> {
    mode_at(channel, optics, grid, 0.0)
}

/// [`fundamental_mode`] of a channel centred at `center`.
pub fn mode_at(
    channel: &ChannelProfile,
    optics: &OpticalParams,
    grid: &Grid,
    center: f64,
) -> Result<Mode> {
    let lb = optics.reduced_wavelength();
    let n = grid.n;
    let ds = MODE_STEP;
    let half_v: Vec<f64> = grid
        .xs()
        .map(|x| (channel.index(x - center) * ds / (2.0 * lb)).exp())
        .collect();
    let kin: Vec<f64> = wavenumbers(grid)
        .map(|k| (-lb * k * k * ds / (2.0 * optics.n_s)).exp() / n as f64)
        .collect();

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut psi: Vec<C64> = grid
        .xs()
        .map(|x| C64::from((-((x - center) / (2.0 * channel.w1)).powi(2)).exp()))
        .collect();
    normalize(&mut psi, grid.dx);
    let mut prev = psi.clone();
    for step in 0..MODE_MAX_STEPS {
        for (p, h) in psi.iter_mut().zip(&half_v) {
            *p *= *h;
        }
        fwd.process(&mut psi);
        for (p, k) in psi.iter_mut().zip(&kin) {
            *p *= *k;
        }
        inv.process(&mut psi);
        for (p, h) in psi.iter_mut().zip(&half_v) {
            *p *= *h;
        }
        let growth = normalize(&mut psi, grid.dx);
        if step % 50 == 49 {
            let change = psi
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                * grid.dx;
            if change < MODE_TOL {
                // Power grows as exp(2β ds) per step.
                let beta = growth.ln() / (2.0 * ds);
                let field = FieldEnvelope {
                    grid: *grid,
                    psi: psi.iter().map(|z| C64::from(z.re)).collect(),
                };
                return Ok(Mode { field, beta });
            }
            prev.copy_from_slice(&psi);
        }
    }
    Err(Error::Solver(format!(
        "mode solver did not converge in {MODE_MAX_STEPS} steps"
    )))
}

fn normalize(psi: &mut [C64], dx: f64) -> f64 {
    let p = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
    let s = 1.0 / p.sqrt();
    for z in psi.iter_mut() {
        *z *= s;
    }
    p
}

pub(super) fn wavenumbers(grid: &Grid) -> impl Iterator<Item = f64> + '_ {
    let n = grid.n;
    let dk = std::f64::consts::TAU / (n as f64 * grid.dx);
    (0..n).map(move |i| {
        let j = if i < n.div_ceil(2) {
            i as f64
        } else {
            i as f64 - n as f64
        };
        j * dk
    })
}

/// Normalised overlap `|⟨g|m⟩|² / (⟨g|g⟩⟨m|m⟩)` of a unit Gaussian of
/// half width `w` (1/e amplitude) with `mode`.
pub fn gaussian_overlap(mode: &FieldEnvelope, w: f64) -> f64 {
    let mut gm = 0.0;
    let mut gg = 0.0;
    let mut mm = 0.0;
    for (x, m) in mode.grid.xs().zip(&mode.psi) {
        let g = (-(x / w).powi(2)).exp();
        gm += g * m.re;
        gg += g * g;
        mm += m.norm_sqr();
    }
    gm * gm / (gg * mm)
}

/// Gaussian launch matched to the channel's fundamental mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Launch {
    pub width: f64,
    pub overlap: f64,
    pub beta: f64,
}

const MIN_OVERLAP: f64 = 0.99;

impl Launch {
    /// Fit the Gaussian width by golden-section search on the overlap.
    pub fn fit(channel: &ChannelProfile, optics: &OpticalParams, grid: &Grid) -> Result<Self> {
        let mode = fundamental_mode(channel, optics, grid)?;
        let f = |w: f64| -gaussian_overlap(&mode.field, w);
        let (mut a, mut b) = (0.1 * channel.w1, 10.0 * channel.w1);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-6 * channel.w1 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        let width = 0.5 * (a + b);
        let overlap = -f(width);
        if overlap < MIN_OVERLAP {
            return Err(Error::Solver(format!(
                "best Gaussian overlaps the mode by only {overlap:.4}"
            )));
        }
        Ok(Launch {
            width,
            overlap,
            beta: mode.beta,
        })
    }

    fn amplitude(&self, x: f64) -> f64 {
        (-(x / self.width).powi(2)).exp()
    }
}

/// Unit-power Gaussian centred on `center`.
pub fn launch_field(launch: &Launch, grid: &Grid, center: f64) -> FieldEnvelope {
    launch_superposition(launch, grid, &[(center, C64::new(1.0, 0.0))])
}

/// Sum of launch Gaussians with the given amplitudes, scaled to unit power.
pub fn launch_superposition(launch: &Launch, grid: &Grid, parts: &[(f64, C64)]) -> FieldEnvelope {
    let psi = grid
        .xs()
        .map(|x| {
            parts
                .iter()
                .map(|(c, a)| a * launch.amplitude(x - c))
                .sum::<C64>()
        })
        .collect();
    let mut f = FieldEnvelope { grid: *grid, psi };
    let p = f.power();
    if p > 0.0 {
        f.scale(1.0 / p.sqrt());
    }
    f
}
