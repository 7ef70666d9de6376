use rayon::prelude::*;

use super::{
    bpm_propagate, launch_field, BpmConfig, ChannelProfile, CouplingLaw, Launch, OpticalParams,
    WaveguideLayout,
};
use crate::error::{Error, Result};

const MIN_R_SQUARED: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialFit {
    pub law: CouplingLaw,
    pub r_squared: f64,
}

/// Least-squares fit of `ln Ω = ln Ω_ref − k(d − d_ref)`.
pub fn fit_exponential(points: &[(f64, f64)], d_ref: f64) -> Result<ExponentialFit> {
    if points.len() < 3 {
        return Err(Error::Calibration(format!(
            "need at least 3 separations, got {}",
            points.len()
        )));
    }
    if let Some((d, o)) = points.iter().find(|(_, o)| !(*o > 0.0)) {
        return Err(Error::Calibration(format!(
            "non-positive coupling {o} at d = {d}"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(d, _)| d - d_ref).collect();
    let ys: Vec<f64> = points.iter().map(|(_, o)| o.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Calibration("separations are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(ExponentialFit {
        law: CouplingLaw {
            omega_ref: intercept.exp(),
            d_ref,
            k: -slope,
        },
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingCalibration {
    pub fit: ExponentialFit,
    /// `(d, Ω)` per separation.
    pub points: Vec<(f64, f64)>,
}

/// Coupling between two straight guides `d` apart from the power beat.
///
/// Light launched in the left guide reaches the right one after `π/Ω`. If the
/// run ends before the first transfer maximum, `Ω` follows from
/// `P_R = sin²(Ωz/2)` at the last sample.
fn measure_coupling(
    channel: &ChannelProfile,
    optics: &OpticalParams,
    launch: &Launch,
    cfg: &BpmConfig,
    d: f64,
) -> Result<f64> {
    let layout = WaveguideLayout::pair(d);
    let input = launch_field(launch, &cfg.grid, -0.5 * d);
    let run = bpm_propagate(&layout, channel, optics, &input, &cfg.with_stride(1))?;
    let frac: Vec<(f64, f64)> = run
        .samples
        .iter()
        .map(|s| (s.z, s.channels[1] / (s.channels[0] + s.channels[1])))
        .collect();
    for i in 1..frac.len() - 1 {
        let (p0, p1, p2) = (frac[i - 1].1, frac[i].1, frac[i + 1].1);
        if p1 > 0.5 && p1 >= p0 && p1 > p2 {
            let h = frac[i + 1].0 - frac[i].0;
            let denom = p0 - 2.0 * p1 + p2;
            let shift = if denom != 0.0 {
                0.5 * (p0 - p2) / denom
            } else {
                0.0
            };
            return Ok(std::f64::consts::PI / (frac[i].0 + shift * h));
        }
    }
    let (z, p) = *frac.last().expect("samples recorded");
    Ok(2.0 * p.clamp(0.0, 1.0).sqrt().asin() / z)
}

/// Run two-guide propagations at each separation concurrently and fit the
/// exponential law, referenced to `d_ref`.
pub fn calibrate_coupling(
    channel: &ChannelProfile,
    optics: &OpticalParams,
    cfg: &BpmConfig,
    separations: &[f64],
    d_ref: f64,
) -> Result<CouplingCalibration> {
    if separations.len() < 3 {
        return Err(Error::Calibration(format!(
            "need at least 3 separations, got {}",
            separations.len()
        )));
    }
    let lossless = channel.with_dn_i(0.0);
    let launch = Launch::fit(&lossless, optics, &cfg.grid)?;
    let points = separations
        .par_iter()
        .map(|&d| measure_coupling(&lossless, optics, &launch, cfg, d).map(|o| (d, o)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_exponential(&points, d_ref)?;
    if fit.r_squared < MIN_R_SQUARED {
        return Err(Error::Calibration(format!(
            "coupling is not exponential in separation (R^2 = {:.5})",
            fit.r_squared
        )));
    }
    Ok(CouplingCalibration { fit, points })
}

/// Power decay rate of a single straight guide with the channel's `dn_i`,
/// fitted to `ln P` over the second half of the run.
pub fn measure_decay_rate(
    channel: &ChannelProfile,
    optics: &OpticalParams,
    cfg: &BpmConfig,
) -> Result<f64> {
    let launch = Launch::fit(&channel.with_dn_i(0.0), optics, &cfg.grid)?;
    let input = launch_field(&launch, &cfg.grid, 0.0);
    let run = bpm_propagate(
        &WaveguideLayout::single(channel.dn_i),
        channel,
        optics,
        &input,
        cfg,
    )?;
    let tail: Vec<(f64, f64)> = run
        .samples
        .iter()
        .filter(|s| s.z >= 0.5 * cfg.z_max)
        .map(|s| (s.z, s.channels[0].ln()))
        .collect();
    if tail.len() < 2 {
        return Err(Error::Calibration(
            "too few samples to fit a decay rate".into(),
        ));
    }
    let n = tail.len() as f64;
    let mz = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let szz: f64 = tail.iter().map(|p| (p.0 - mz).powi(2)).sum();
    let szl: f64 = tail.iter().map(|p| (p.0 - mz) * (p.1 - ml)).sum();
    Ok(-szl / szz)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCalibration {
    pub dn_i: f64,
    pub target_rate: f64,
    pub measured_rate: f64,
    pub relative_error: f64,
    /// Rate measured at the starting `dn_i`.
    pub initial_rate: f64,
}

/// Find the imaginary index fraction whose single-guide power decay rate
/// equals `target_rate`, starting from `channel.dn_i`.
///
/// The rate is nearly linear in `dn_i`, so a few proportional updates
/// suffice. Fails if the final rate is off by more than `tolerance`.
pub fn calibrate_loss(
    channel: &ChannelProfile,
    optics: &OpticalParams,
    cfg: &BpmConfig,
    target_rate: f64,
    tolerance: f64,
) -> Result<LossCalibration> {
    if !(target_rate > 0.0) {
        return Err(Error::Calibration(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    let mut dn_i = if channel.dn_i > 0.0 {
        channel.dn_i
    } else {
        1e-3
    };
    let initial_rate = measure_decay_rate(&channel.with_dn_i(dn_i), optics, cfg)?;
    let mut rate = initial_rate;
    for _ in 0..4 {
        if ((rate - target_rate) / target_rate).abs() < 0.1 * tolerance {
            break;
        }
        if !(rate > 0.0) {
            return Err(Error::Calibration(format!(
                "decay rate {rate} at dnI = {dn_i}"
            )));
        }
        dn_i *= target_rate / rate;
        rate = measure_decay_rate(&channel.with_dn_i(dn_i), optics, cfg)?;
    }
    let relative_error = ((rate - target_rate) / target_rate).abs();
    if relative_error > tolerance {
        return Err(Error::Calibration(format!(
            "decay rate {rate:.4e} misses target {target_rate:.4e} by {:.2}%",
            100.0 * relative_error
        )));
    }
    Ok(LossCalibration {
        dn_i,
        target_rate,
        measured_rate: rate,
        relative_error,
        initial_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_recovery_from_synthetic_data() {
        let law = CouplingLaw {
            omega_ref: 3.7e-4,
            d_ref: 5.95,
            k: 2.2,
        };
        let pts: Vec<(f64, f64)> = [5.5, 6.0, 6.5, 7.25]
            .iter()
            .map(|&d| (d, law.omega(d)))
            .collect();
        let fit = fit_exponential(&pts, 5.95).unwrap();
        assert!((fit.law.k - 2.2).abs() < 1e-12);
        assert!((fit.law.omega_ref / 3.7e-4 - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_exponential(&[(1.0, 1.0), (2.0, 0.5)], 1.0).is_err());
        assert!(fit_exponential(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)], 1.0).is_err());
        assert!(fit_exponential(&[(1.0, 1.0), (1.0, 0.5), (1.0, 0.1)], 1.0).is_err());
    }
}
