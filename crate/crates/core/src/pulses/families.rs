use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::PulsePair;
use crate::error::{Error, Result};

fn check_shape(omega0: f64, width: f64, tau: f64) -> Result<()> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "omega0 must be > 0, got {omega0}"
        )));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "T must be > 0, got {width}"
        )));
    }
    if !tau.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "tau must be finite, got {tau}"
        )));
    }
    Ok(())
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Peak coupling `omega0`, width `T` and delay `tau` of a Gaussian pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct GaussianParams {
    pub omega0: f64,
    pub T: f64,
    pub tau: f64,
}

impl GaussianParams {
    #[allow(non_snake_case)]
    pub fn new(omega0: f64, T: f64, tau: f64) -> Result<Self> {
        check_shape(omega0, T, tau)?;
        Ok(GaussianParams { omega0, T, tau })
    }

    /// The constant cancelling rate `2τ/T²`; independent of `omega0`.
    pub fn gamma_constant(&self) -> f64 {
        2.0 * self.tau / (self.T * self.T)
    }
}

/// `Ωp(t) = Ω₀ exp[−(t−τ/2)²/T²]`, `Ωs(t) = Ω₀ exp[−(t+τ/2)²/T²]`.
///
/// Stokes peaks first for `τ > 0` (counter-intuitive ordering).
#[derive(Clone, Debug)]
pub struct GaussianPair {
    pub params: GaussianParams,
}

pub fn make_gaussian_pair(params: GaussianParams) -> GaussianPair {
    GaussianPair { params }
}

impl GaussianPair {
    fn arg(&self, t: f64, shift: f64) -> f64 {
        (t - shift) / self.params.T
    }
}

impl PulsePair for GaussianPair {
    fn pump(&self, t: f64) -> f64 {
        let u = self.arg(t, self.params.tau / 2.0);
        self.params.omega0 * (-u * u).exp()
    }

    fn stokes(&self, t: f64) -> f64 {
        let u = self.arg(t, -self.params.tau / 2.0);
        self.params.omega0 * (-u * u).exp()
    }

    fn pump_deriv(&self, t: f64) -> f64 {
        self.pump(t) * self.pump_log_deriv(t)
    }

    fn stokes_deriv(&self, t: f64) -> f64 {
        self.stokes(t) * self.stokes_log_deriv(t)
    }

    fn pump_log_deriv(&self, t: f64) -> f64 {
        -2.0 * self.arg(t, self.params.tau / 2.0) / self.params.T
    }

    fn stokes_log_deriv(&self, t: f64) -> f64 {
        -2.0 * self.arg(t, -self.params.tau / 2.0) / self.params.T
    }

    fn log_ratio(&self, t: f64) -> f64 {
        2.0 * t * self.params.tau / (self.params.T * self.params.T)
    }

    fn strictly_positive(&self, _t: f64) -> bool {
        true
    }

    fn constant_gamma(&self) -> Option<f64> {
        Some(self.params.gamma_constant())
    }

    fn time_scale(&self) -> f64 {
        self.params.T
    }

    fn family(&self) -> &'static str {
        "gaussian"
    }
}

/// Same fields as [`GaussianParams`], for the hyperbolic-secant family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SechParams {
    pub omega0: f64,
    pub T: f64,
    pub tau: f64,
}

impl SechParams {
    #[allow(non_snake_case)]
    pub fn new(omega0: f64, T: f64, tau: f64) -> Result<Self> {
        check_shape(omega0, T, tau)?;
        Ok(SechParams { omega0, T, tau })
    }

    /// `(1/T)[tanh((t+τ/2)/T) − tanh((t−τ/2)/T)]`.
    pub fn gamma_closed_form(&self, t: f64) -> f64 {
        let w = self.T;
        (((t + self.tau / 2.0) / w).tanh() - ((t - self.tau / 2.0) / w).tanh()) / w
    }
}

/// `Ωp(t) = Ω₀ sech[(t−τ/2)/T]`, `Ωs(t) = Ω₀ sech[(t+τ/2)/T]`.
#[derive(Clone, Debug)]
pub struct SechPair {
    pub params: SechParams,
}

pub fn make_sech_pair(params: SechParams) -> SechPair {
    SechPair { params }
}

impl SechPair {
    fn arg(&self, t: f64, shift: f64) -> f64 {
        (t - shift) / self.params.T
    }
}

impl PulsePair for SechPair {
    fn pump(&self, t: f64) -> f64 {
        self.params.omega0 / self.arg(t, self.params.tau / 2.0).cosh()
    }

    fn stokes(&self, t: f64) -> f64 {
        self.params.omega0 / self.arg(t, -self.params.tau / 2.0).cosh()
    }

    fn pump_deriv(&self, t: f64) -> f64 {
        self.pump(t) * self.pump_log_deriv(t)
    }

    fn stokes_deriv(&self, t: f64) -> f64 {
        self.stokes(t) * self.stokes_log_deriv(t)
    }

    fn pump_log_deriv(&self, t: f64) -> f64 {
        -self.arg(t, self.params.tau / 2.0).tanh() / self.params.T
    }

    fn stokes_log_deriv(&self, t: f64) -> f64 {
        -self.arg(t, -self.params.tau / 2.0).tanh() / self.params.T
    }

    fn log_ratio(&self, t: f64) -> f64 {
        ln_cosh(self.arg(t, -self.params.tau / 2.0)) - ln_cosh(self.arg(t, self.params.tau / 2.0))
    }

    fn strictly_positive(&self, _t: f64) -> bool {
        true
    }

    fn constant_gamma(&self) -> Option<f64> {
        (self.params.tau == 0.0).then_some(0.0)
    }

    fn time_scale(&self) -> f64 {
        self.params.T
    }

    fn family(&self) -> &'static str {
        "sech"
    }
}

/// Peak `omega0`, half-duration `T` and delay `tau` of a sin² pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Sin2Params {
    pub omega0: f64,
    pub T: f64,
    pub tau: f64,
}

impl Sin2Params {
    #[allow(non_snake_case)]
    pub fn new(omega0: f64, T: f64, tau: f64) -> Result<Self> {
        check_shape(omega0, T, tau)?;
        Ok(Sin2Params { omega0, T, tau })
    }
}

/// Compactly supported sin² pulses: `Ω₀ cos²(π(t−c)/2T)` on `|t − c| < T`,
/// zero elsewhere, with centers `c = ±τ/2`. Their ratio has no usable
/// logarithmic derivative at the support edges.
#[derive(Clone, Debug)]
pub struct Sin2Pair {
    pub params: Sin2Params,
}

pub fn make_sin2_pair(params: Sin2Params) -> Sin2Pair {
    Sin2Pair { params }
}

impl Sin2Pair {
    fn value(&self, t: f64, center: f64) -> f64 {
        let u = t - center;
        if u.abs() >= self.params.T {
            return 0.0;
        }
        let c = (PI * u / (2.0 * self.params.T)).cos();
        self.params.omega0 * c * c
    }

    fn deriv(&self, t: f64, center: f64) -> f64 {
        let u = t - center;
        if u.abs() >= self.params.T {
            return 0.0;
        }
        let a = PI / (2.0 * self.params.T);
        -self.params.omega0 * a * (2.0 * a * u).sin()
    }
}

impl PulsePair for Sin2Pair {
    fn pump(&self, t: f64) -> f64 {
        self.value(t, self.params.tau / 2.0)
    }

    fn stokes(&self, t: f64) -> f64 {
        self.value(t, -self.params.tau / 2.0)
    }

    fn pump_deriv(&self, t: f64) -> f64 {
        self.deriv(t, self.params.tau / 2.0)
    }

    fn stokes_deriv(&self, t: f64) -> f64 {
        self.deriv(t, -self.params.tau / 2.0)
    }

    fn time_scale(&self) -> f64 {
        self.params.T
    }

    fn family(&self) -> &'static str {
        "sin2"
    }
}

/// Time-independent envelopes; useful for decoupled and frozen-frame checks.
#[derive(Clone, Debug)]
pub struct ConstantPair {
    pub pump: f64,
    pub stokes: f64,
}

impl ConstantPair {
    pub fn new(pump: f64, stokes: f64) -> Self {
        ConstantPair { pump, stokes }
    }
}

impl PulsePair for ConstantPair {
    fn pump(&self, _t: f64) -> f64 {
        self.pump
    }

    fn stokes(&self, _t: f64) -> f64 {
        self.stokes
    }

    fn pump_deriv(&self, _t: f64) -> f64 {
        0.0
    }

    fn stokes_deriv(&self, _t: f64) -> f64 {
        0.0
    }

    fn family(&self) -> &'static str {
        "constant"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }

    #[test]
    fn gaussian_values() {
        let p = make_gaussian_pair(GaussianParams::new(1.0, 1.0, 1.0).unwrap());
        assert_eq!(p.pump(0.5), 1.0);
        assert!((p.pump(0.0) - (-0.25f64).exp()).abs() < 1e-15);
        assert_eq!(p.pump(0.0), p.stokes(0.0));
        // Stokes first.
        assert!(p.stokes(-1.0) > p.pump(-1.0));
        assert!(p.stokes(1.0) < p.pump(1.0));
    }

    #[test]
    fn sech_values() {
        let p = make_sech_pair(SechParams::new(1.0, 1.0, 2.0).unwrap());
        assert_eq!(p.pump(1.0), 1.0);
        let z = make_sech_pair(SechParams::new(1.0, 1.0, 0.0).unwrap());
        for t in [-3.0, -0.2, 0.0, 1.7] {
            assert_eq!(z.pump(t), z.stokes(t));
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GaussianParams::new(0.0, 1.0, 1.0).is_err());
        assert!(GaussianParams::new(1.0, -1.0, 1.0).is_err());
        assert!(SechParams::new(1.0, 0.0, 1.0).is_err());
        assert!(Sin2Params::new(-1.0, 1.0, 1.0).is_err());
        assert!(SechParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let pairs: Vec<Box<dyn PulsePair>> = vec![
            Box::new(make_gaussian_pair(
                GaussianParams::new(1.3, 1.0, 1.0).unwrap(),
            )),
            Box::new(make_sech_pair(SechParams::new(6.0, 1.0, 3.0).unwrap())),
            Box::new(make_sin2_pair(Sin2Params::new(2.0, 1.5, 1.0).unwrap())),
        ];
        let h = 1e-5;
        for pair in &pairs {
            for i in 0..40 {
                let t = -2.0 + 0.1 * i as f64 + 0.013;
                for (d, f) in [
                    (pair.pump_deriv(t), central_diff(|x| pair.pump(x), t, h)),
                    (pair.stokes_deriv(t), central_diff(|x| pair.stokes(x), t, h)),
                ] {
                    if d.abs() > 1e-3 {
                        assert!(
                            ((d - f) / d).abs() < 1e-6,
                            "{} t={t}: {d} vs {f}",
                            pair.family()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn log_ratio_matches_values() {
        let g = make_gaussian_pair(GaussianParams::new(1.3, 1.0, 0.7).unwrap());
        let s = make_sech_pair(SechParams::new(6.0, 1.0, 3.0).unwrap());
        for t in [-3.0, -1.0, 0.0, 0.4, 2.5] {
            let lg = (g.pump(t) / g.stokes(t)).ln();
            assert!((g.log_ratio(t) - lg).abs() < 1e-12);
            let ls = (s.pump(t) / s.stokes(t)).ln();
            assert!((s.log_ratio(t) - ls).abs() < 1e-12);
        }
    }

    #[test]
    fn sech_log_ratio_far_tail() {
        let s = make_sech_pair(SechParams::new(1.0, 1.0, 3.0).unwrap());
        // Envelopes underflow but the ratio is still 2·(τ/2)/T in the limit.
        let r = s.log_ratio(-2000.0);
        assert!((r + 3.0).abs() < 1e-12, "{r}");
    }
}
