//! Pump/Stokes envelopes and the gain/loss rate that cancels the
//! nonadiabatic coupling.
//!
//! The rate is the logarithmic derivative of the envelope ratio,
//! `γ(t) = d/dt ln(Ωp/Ωs) = Ω̇p/Ωp − Ω̇s/Ωs`, which is algebraically the same
//! as `2θ̇ / sin 2θ` with `tan θ = Ωp/Ωs`. [`GainProfile`] evaluates the first
//! form and exposes the second so the two can be checked against each other.

mod families;
mod table;

use std::fmt;
use std::sync::Arc;

pub use families::{
    make_gaussian_pair, make_sech_pair, make_sin2_pair, ConstantPair, GaussianPair, GaussianParams,
    SechPair, SechParams, Sin2Pair, Sin2Params,
};
pub use table::{load_table_csv, CubicSpline, TabulatedPair};

use crate::error::{Error, Result};

/// Default screening bound on `|γ|`, in units of `1/T`.
pub const DEFAULT_GAMMA_MAX: f64 = 1e6;

/// A pump/Stokes envelope pair with first derivatives.
///
/// Envelopes are real and non-negative. Families with closed-form logarithmic
/// derivatives override the `*_log_deriv` and `log_ratio` methods so the rate
/// stays well defined in the far tails where the envelopes underflow.
pub trait PulsePair: Send + Sync + fmt::Debug {
    fn pump(&self, t: f64) -> f64;
    fn stokes(&self, t: f64) -> f64;
    fn pump_deriv(&self, t: f64) -> f64;
    fn stokes_deriv(&self, t: f64) -> f64;

    fn pump_log_deriv(&self, t: f64) -> f64 {
        self.pump_deriv(t) / self.pump(t)
    }

    fn stokes_log_deriv(&self, t: f64) -> f64 {
        self.stokes_deriv(t) / self.stokes(t)
    }

    /// `ln(Ωp/Ωs)`.
    fn log_ratio(&self, t: f64) -> f64 {
        (self.pump(t) / self.stokes(t)).ln()
    }

    /// Whether both envelopes are strictly positive at `t`, so that the
    /// logarithmic derivative exists.
    fn strictly_positive(&self, t: f64) -> bool {
        self.pump(t) > 0.0 && self.stokes(t) > 0.0
    }

    /// Closed-form constant rate, when the family admits one.
    fn constant_gamma(&self) -> Option<f64> {
        None
    }

    /// Characteristic duration used to scale default bounds.
    fn time_scale(&self) -> f64 {
        1.0
    }

    fn family(&self) -> &'static str;
}

pub type SharedPair = Arc<dyn PulsePair>;

/// The gain/loss rate `γ(t)` applied as `∓iγ/2` on the outer bare states.
#[derive(Clone, Debug)]
pub struct GainProfile {
    source: GainSource,
    gamma_max: f64,
}

#[derive(Clone, Debug)]
enum GainSource {
    Synthesized(SharedPair),
    Constant(f64),
}

/// Build the cancelling gain/loss profile for `pair`.
///
/// Nothing is evaluated here; divergence surfaces from [`GainProfile::gamma`]
/// or, for a whole window, [`GainProfile::screen`].
pub fn synthesize_gamma(pair: SharedPair) -> GainProfile {
    let gamma_max = DEFAULT_GAMMA_MAX / pair.time_scale();
    GainProfile {
        source: GainSource::Synthesized(pair),
        gamma_max,
    }
}

impl GainProfile {
    /// A fixed rate, independent of any pulse pair.
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "constant gain/loss rate must be finite, got {value}"
            )));
        }
        Ok(GainProfile {
            source: GainSource::Constant(value),
            gamma_max: f64::INFINITY,
        })
    }

    pub fn with_gamma_max(mut self, gamma_max: f64) -> Self {
        self.gamma_max = gamma_max;
        self
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    /// The time-independent value, if the profile is constant.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.source {
            GainSource::Constant(v) => Some(*v),
            GainSource::Synthesized(pair) => pair.constant_gamma(),
        }
    }

    /// `γ(t) = Ω̇p/Ωp − Ω̇s/Ωs`.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        let pair = match &self.source {
            GainSource::Constant(v) => return Ok(*v),
            GainSource::Synthesized(pair) => pair,
        };
        if !pair.strictly_positive(t) {
            return Err(Error::Divergence {
                time: t,
                reason: format!(
                    "envelope not strictly positive (pump = {:e}, stokes = {:e})",
                    pair.pump(t),
                    pair.stokes(t)
                ),
            });
        }
        let g = pair.pump_log_deriv(t) - pair.stokes_log_deriv(t);
        if !g.is_finite() {
            return Err(Error::Divergence {
                time: t,
                reason: "logarithmic derivative is not finite".into(),
            });
        }
        if g.abs() > self.gamma_max {
            return Err(Error::Divergence {
                time: t,
                reason: format!("|gamma| = {:e} exceeds bound {:e}", g.abs(), self.gamma_max),
            });
        }
        Ok(g)
    }

    /// `γ(t) = 2θ̇ / sin 2θ`, evaluated from the mixing angle and its rate.
    ///
    /// Returns `None` for constant profiles or where `sin 2θ` vanishes.
    pub fn gamma_from_angle(&self, t: f64) -> Option<f64> {
        let GainSource::Synthesized(pair) = &self.source else {
            return None;
        };
        let (p, s) = (pair.pump(t), pair.stokes(t));
        let (dp, ds) = (pair.pump_deriv(t), pair.stokes_deriv(t));
        let scale = p.max(s);
        if scale <= 0.0 {
            return None;
        }
        let (p, s, dp, ds) = (p / scale, s / scale, dp / scale, ds / scale);
        let theta = p.atan2(s);
        let theta_dot = (dp * s - p * ds) / (p * p + s * s);
        let sin2 = (2.0 * theta).sin();
        (sin2 != 0.0).then(|| 2.0 * theta_dot / sin2)
    }

    /// Evaluate `γ` at every sample and fail on the first divergent point.
    pub fn screen<I: IntoIterator<Item = f64>>(&self, times: I) -> Result<()> {
        if matches!(self.source, GainSource::Constant(_)) {
            return Ok(());
        }
        for t in times {
            self.gamma(t)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(omega0: f64, t: f64, tau: f64) -> SharedPair {
        Arc::new(make_gaussian_pair(
            GaussianParams::new(omega0, t, tau).unwrap(),
        ))
    }

    #[test]
    fn gaussian_gamma_is_two_tau_over_t_squared() {
        let g = synthesize_gamma(gaussian(1.3, 1.0, 1.0));
        for i in 0..=100 {
            let t = -5.0 + 0.1 * i as f64;
            assert!((g.gamma(t).unwrap() - 2.0).abs() < 1e-12);
        }
        assert_eq!(g.constant_value(), Some(2.0));
    }

    #[test]
    fn zero_delay_gives_zero_rate() {
        let g = synthesize_gamma(gaussian(1.0, 1.0, 0.0));
        assert_eq!(g.gamma(0.3).unwrap(), 0.0);
        let sech = synthesize_gamma(Arc::new(make_sech_pair(
            SechParams::new(1.0, 1.0, 0.0).unwrap(),
        )));
        assert_eq!(sech.gamma(-2.0).unwrap(), 0.0);
    }

    #[test]
    fn sin2_edges_diverge() {
        let pair = Arc::new(make_sin2_pair(Sin2Params::new(1.0, 1.0, 1.0).unwrap()));
        let g = synthesize_gamma(pair);
        // Stokes support is [-1.5, 0.5]; at t = -1.5 it vanishes.
        match g.gamma(-1.5) {
            Err(Error::Divergence { time, .. }) => assert_eq!(time, -1.5),
            other => panic!("expected divergence, got {other:?}"),
        }
        // Inside the overlap region the rate exists.
        assert!(g.gamma(0.0).unwrap().is_finite());
        // Approaching the pump's trailing edge it blows up.
        let near = g.gamma(1.5 - 1e-9);
        assert!(near.is_err() || near.unwrap().abs() > 1e6);
    }

    #[test]
    fn bound_is_enforced() {
        let g = synthesize_gamma(gaussian(1.0, 1.0, 1.0)).with_gamma_max(1.5);
        assert!(matches!(g.gamma(0.0), Err(Error::Divergence { .. })));
    }

    #[test]
    fn constant_profile() {
        let g = GainProfile::constant(2.5).unwrap();
        assert_eq!(g.gamma(123.0).unwrap(), 2.5);
        assert!(g.gamma_from_angle(0.0).is_none());
        assert!(GainProfile::constant(f64::NAN).is_err());
    }
}
