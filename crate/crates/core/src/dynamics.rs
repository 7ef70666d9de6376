//! Time evolution of the three-level amplitudes under `i ċ = H^γ(t) c`.
//!
//! Integration is classic fourth-order Runge–Kutta with a fixed step. The
//! norm is never renormalized: with gain/loss switched on it changes during
//! the run and is reported as is.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{
    bare_hamiltonian, dark_state, to_adiabatic, AdiabaticAmplitudes, AdiabaticFrame, StateVector3,
};
use crate::pulses::{synthesize_gamma, GainProfile, PulsePair, SharedPair};
use crate::C64;

/// Minimum number of steps across the window.
pub const MIN_STEPS: usize = 100;

/// Integration window and sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationConfig {
    pub t_start: f64,
    pub t_end: f64,
    /// Requested step; the effective step divides the window exactly.
    pub dt: f64,
    pub record_stride: usize,
    /// Also store the adiabatic-basis projection of every recorded sample.
    pub record_adiabatic: bool,
}

impl PropagationConfig {
    pub fn new(t_start: f64, t_end: f64, dt: f64, record_stride: usize) -> Result<Self> {
        let cfg = PropagationConfig {
            t_start,
            t_end,
            dt,
            record_stride,
            record_adiabatic: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `[−5T, 5T]` with `dt = T/2000`.
    #[allow(non_snake_case)]
    pub fn default_for(T: f64) -> Self {
        PropagationConfig {
            t_start: -5.0 * T,
            t_end: 5.0 * T,
            dt: T / 2000.0,
            record_stride: 1,
            record_adiabatic: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_adiabatic(mut self, on: bool) -> Self {
        self.record_adiabatic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t_start.is_finite()
            && self.t_end.is_finite()
            && self.t_start < self.t_end
            && self.dt.is_finite()
            && self.dt > 0.0;
        if !ok {
            return Err(Error::ParameterDomain(format!(
                "invalid window [{}, {}] with dt = {}",
                self.t_start, self.t_end, self.dt
            )));
        }
        if (self.t_end - self.t_start) / self.dt < MIN_STEPS as f64 {
            return Err(Error::ParameterDomain(format!(
                "window must span at least {MIN_STEPS} steps"
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::ParameterDomain("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps() as f64
    }

    /// Time of step boundary `k`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps() {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step()
        }
    }
}

/// How the initial amplitudes are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialState {
    /// `|Φ₀(t_start)⟩ = cos θ |1⟩ − sin θ |3⟩`.
    DarkState,
    /// Bare state `|n⟩`.
    Bare(usize),
    Custom(StateVector3),
}

impl InitialState {
    pub fn resolve(&self, pair: &dyn PulsePair, t_start: f64) -> Result<StateVector3> {
        match *self {
            InitialState::DarkState => Ok(dark_state(AdiabaticFrame::at(pair, t_start)?.theta)),
            InitialState::Bare(n) if (1..=3).contains(&n) => Ok(StateVector3::basis(n)),
            InitialState::Bare(n) => Err(Error::ParameterDomain(format!("no bare state |{n}>"))),
            InitialState::Custom(c) => Ok(c),
        }
    }
}

/// Recorded samples of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector3>,
    /// Mixing angle per sample; NaN where both envelopes vanish.
    pub thetas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub adiabatic: Option<Vec<AdiabaticAmplitudes>>,
    /// Extremes over every integration step, not only recorded samples.
    pub max_norm: f64,
    pub min_norm: f64,
    pub peak_p2: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn populations(&self, i: usize) -> [f64; 3] {
        self.states[i].populations()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.states[i].norm_sqr()
    }

    pub fn final_state(&self) -> &StateVector3 {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_norm(&self) -> f64 {
        self.final_state().norm_sqr()
    }

    pub const CSV_HEADER: [&'static str; 13] = [
        "t", "Re(c1)", "Im(c1)", "Re(c2)", "Im(c2)", "Re(c3)", "Im(c3)", "P1", "P2", "P3", "norm",
        "theta", "gamma",
    ];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        for i in 0..self.len() {
            let c = &self.states[i];
            let p = c.populations();
            let row = [
                self.times[i],
                c.c(1).re,
                c.c(1).im,
                c.c(2).re,
                c.c(2).im,
                c.c(3).re,
                c.c(3).im,
                p[0],
                p[1],
                p[2],
                p.iter().sum(),
                self.thetas[i],
                self.gammas[i],
            ];
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn gamma_at(gain: Option<&GainProfile>, t: f64) -> Result<f64> {
    gain.map_or(Ok(0.0), |g| g.gamma(t))
}

fn derivative(pair: &dyn PulsePair, gamma: f64, t: f64, c: &StateVector3) -> StateVector3 {
    let h = bare_hamiltonian(pair.pump(t), pair.stokes(t), gamma);
    StateVector3((h.0 * c.0) * C64::new(0.0, -1.0))
}

/// Integrate from `c0` over the window in `cfg`.
///
/// `gain = None` is the Hermitian problem. The gain profile is screened on
/// every stage time before the first step.
pub fn propagate(
    pair: &dyn PulsePair,
    gain: Option<&GainProfile>,
    c0: &StateVector3,
    cfg: &PropagationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.steps();
    let dt = cfg.step();
    if let Some(g) = gain {
        g.screen((0..=2 * n).map(|k| {
            if k == 2 * n {
                cfg.t_end
            } else {
                cfg.t_start + 0.5 * dt * k as f64
            }
        }))?;
    }
    if !c0.is_finite() {
        return Err(Error::ParameterDomain("initial state is not finite".into()));
    }

    let capacity = n / cfg.record_stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        thetas: Vec::with_capacity(capacity),
        gammas: Vec::with_capacity(capacity),
        adiabatic: cfg.record_adiabatic.then(|| Vec::with_capacity(capacity)),
        max_norm: c0.norm_sqr(),
        min_norm: c0.norm_sqr(),
        peak_p2: c0.populations()[1],
    };
    let record = |traj: &mut Trajectory, t: f64, c: &StateVector3, g: f64| {
        let theta = AdiabaticFrame::at(pair, t).map_or(f64::NAN, |f| f.theta);
        traj.times.push(t);
        traj.states.push(*c);
        traj.thetas.push(theta);
        traj.gammas.push(g);
        if let Some(a) = traj.adiabatic.as_mut() {
            a.push(to_adiabatic(c, if theta.is_nan() { 0.0 } else { theta }));
        }
    };

    let mut c = *c0;
    let mut g_start = gamma_at(gain, cfg.t_start)?;
    record(&mut traj, cfg.t_start, &c, g_start);
    for k in 0..n {
        let t = cfg.time(k);
        let t_mid = t + 0.5 * dt;
        let t_next = cfg.time(k + 1);
        let g_mid = gamma_at(gain, t_mid)?;
        let g_next = gamma_at(gain, t_next)?;

        let two = C64::from(2.0);
        let k1 = derivative(pair, g_start, t, &c);
        let k2 = derivative(
            pair,
            g_mid,
            t_mid,
            &StateVector3(c.0 + k1.0 * C64::from(0.5 * dt)),
        );
        let k3 = derivative(
            pair,
            g_mid,
            t_mid,
            &StateVector3(c.0 + k2.0 * C64::from(0.5 * dt)),
        );
        let k4 = derivative(
            pair,
            g_next,
            t_next,
            &StateVector3(c.0 + k3.0 * C64::from(dt)),
        );
        c = StateVector3(c.0 + (k1.0 + k2.0 * two + k3.0 * two + k4.0) * C64::from(dt / 6.0));

        if !c.is_finite() {
            return Err(Error::Overflow { time: t_next });
        }
        let norm = c.norm_sqr();
        traj.max_norm = traj.max_norm.max(norm);
        traj.min_norm = traj.min_norm.min(norm);
        traj.peak_p2 = traj.peak_p2.max(c.populations()[1]);
        if (k + 1) % cfg.record_stride == 0 || k + 1 == n {
            record(&mut traj, t_next, &c, g_next);
        }
        g_start = g_next;
    }
    Ok(traj)
}

/// `|c₃(t_f)|²`.
pub fn fidelity(traj: &Trajectory) -> f64 {
    traj.final_state().populations()[2]
}

/// Closed-form dark-state amplitudes at the end of the window under exact
/// cancellation: `a₀ = exp[−½ ∫ γ cos 2θ dt]`, `a₊ = a₋ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DarkStatePrediction {
    pub a0_final: C64,
    /// `∫ γ cos 2θ dt` over the window.
    pub integral_value: f64,
}

impl DarkStatePrediction {
    pub fn a_plus(&self) -> C64 {
        C64::new(0.0, 0.0)
    }

    pub fn a_minus(&self) -> C64 {
        C64::new(0.0, 0.0)
    }
}

/// Quadrature of `γ cos 2θ` with composite Simpson on the propagation grid.
pub fn predict_dark_amplitudes(
    pair: SharedPair,
    cfg: &PropagationConfig,
) -> Result<DarkStatePrediction> {
    cfg.validate()?;
    let gain = synthesize_gamma(pair.clone());
    let mut n = cfg.steps();
    if n % 2 == 1 {
        n += 1;
    }
    let h = (cfg.t_end - cfg.t_start) / n as f64;
    let integrand = |t: f64| -> Result<f64> {
        let g = gain.gamma(t)?;
        let theta = AdiabaticFrame::at(pair.as_ref(), t)?.theta;
        Ok(g * (2.0 * theta).cos())
    };
    let mut sum = integrand(cfg.t_start)? + integrand(cfg.t_end)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(cfg.t_start + k as f64 * h)?;
    }
    let integral_value = sum * h / 3.0;
    Ok(DarkStatePrediction {
        a0_final: C64::new((-0.5 * integral_value).exp(), 0.0),
        integral_value,
    })
}

/// Norm restoration from an imperfectly prepared initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityReport {
    pub epsilon: f64,
    pub final_norm: f64,
    /// `|norm(t_f) − 1|`.
    pub norm_deviation: f64,
    pub max_norm: f64,
    pub fidelity: f64,
    /// Set when the deviation exceeds [`SENSITIVITY_FLAG`].
    pub flagged: bool,
}

pub const SENSITIVITY_FLAG: f64 = 1e-3;

/// Start from `normalize(|Φ₀(t_start)⟩ + ε|2⟩)` and report how far the final
/// norm strays from one.
pub fn sensitivity_probe(
    pair: &dyn PulsePair,
    gain: Option<&GainProfile>,
    epsilon: f64,
    cfg: &PropagationConfig,
) -> Result<SensitivityReport> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::ParameterDomain(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let dark = InitialState::DarkState.resolve(pair, cfg.t_start)?;
    let c0 = StateVector3(dark.0 + StateVector3::basis(2).0 * C64::from(epsilon)).normalized()?;
    let traj = propagate(pair, gain, &c0, cfg)?;
    let final_norm = traj.final_norm();
    let norm_deviation = (final_norm - 1.0).abs();
    Ok(SensitivityReport {
        epsilon,
        final_norm,
        norm_deviation,
        max_norm: traj.max_norm,
        fidelity: fidelity(&traj),
        flagged: norm_deviation > SENSITIVITY_FLAG,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{make_gaussian_pair, ConstantPair, GaussianParams};
    use std::sync::Arc;

    #[test]
    fn config_validation() {
        assert!(PropagationConfig::new(0.0, 1.0, 0.001, 1).is_ok());
        assert!(PropagationConfig::new(1.0, 0.0, 0.001, 1).is_err());
        assert!(PropagationConfig::new(0.0, 1.0, 0.0, 1).is_err());
        assert!(PropagationConfig::new(0.0, 1.0, 0.02, 1).is_err());
        assert!(PropagationConfig::new(0.0, 1.0, 0.001, 0).is_err());
        let cfg = PropagationConfig::default_for(1.0);
        assert_eq!(cfg.steps(), 20000);
        assert_eq!(cfg.time(cfg.steps()), 5.0);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let pair = ConstantPair::new(0.0, 0.0);
        let c0 = StateVector3::new(C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.0, 0.7));
        let cfg = PropagationConfig::new(-1.0, 1.0, 0.01, 7).unwrap();
        let traj = propagate(&pair, None, &c0, &cfg).unwrap();
        for s in &traj.states {
            assert_eq!(*s, c0);
        }
        assert!(traj.thetas.iter().all(|t| t.is_nan()));
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn recorded_norm_matches_populations() {
        let pair: SharedPair = Arc::new(make_gaussian_pair(
            GaussianParams::new(1.3, 1.0, 1.0).unwrap(),
        ));
        let gain = synthesize_gamma(pair.clone());
        let cfg = PropagationConfig::default_for(1.0).with_stride(100);
        let c0 = InitialState::DarkState
            .resolve(pair.as_ref(), cfg.t_start)
            .unwrap();
        let traj = propagate(pair.as_ref(), Some(&gain), &c0, &cfg).unwrap();
        assert_eq!(traj.len(), 201);
        for i in 0..traj.len() {
            let p = traj.populations(i);
            assert!(p.iter().all(|&x| x >= 0.0));
            assert!((traj.norm(i) - p.iter().sum::<f64>()).abs() < 1e-12);
        }
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fidelity_reads_last_sample() {
        let pair = ConstantPair::new(0.0, 0.0);
        let cfg = PropagationConfig::new(0.0, 1.0, 0.001, 1).unwrap();
        let t = propagate(&pair, None, &StateVector3::real(0.0, 0.0, -1.0), &cfg).unwrap();
        assert_eq!(fidelity(&t), 1.0);
        let t = propagate(&pair, None, &StateVector3::basis(1), &cfg).unwrap();
        assert_eq!(fidelity(&t), 0.0);
    }

    #[test]
    fn overflow_is_reported() {
        // A huge constant rate on a decoupled system drives |3⟩ to infinity.
        let pair = ConstantPair::new(0.0, 0.0);
        let gain = GainProfile::constant(2000.0).unwrap();
        let cfg = PropagationConfig::new(0.0, 10.0, 0.01, 1).unwrap();
        let r = propagate(&pair, Some(&gain), &StateVector3::basis(3), &cfg);
        assert!(matches!(r, Err(Error::Overflow { .. })), "{r:?}");
    }

    #[test]
    fn sensitivity_epsilon_domain() {
        let pair = make_gaussian_pair(GaussianParams::new(1.3, 1.0, 1.0).unwrap());
        let cfg = PropagationConfig::default_for(1.0);
        assert!(sensitivity_probe(&pair, None, 1.5, &cfg).is_err());
        assert!(sensitivity_probe(&pair, None, -0.1, &cfg).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let pair = ConstantPair::new(0.0, 1.0);
        let cfg = PropagationConfig::new(0.0, 1.0, 0.01, 50).unwrap();
        let t = propagate(&pair, None, &StateVector3::basis(1), &cfg).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,Re(c1),Im(c1),Re(c2),Im(c2),Re(c3),Im(c3),P1,P2,P3,norm,theta,gamma"
        );
        assert_eq!(lines.count(), t.len());
    }
}
