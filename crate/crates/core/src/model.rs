//! Three-level Λ-system Hamiltonians and the adiabatic basis.
//!
//! `ħ = 1`; energies are angular frequencies. Bare states are ordered
//! `(|1⟩, |2⟩, |3⟩)` and adiabatic states `(|Φ₊⟩, |Φ₀⟩, |Φ₋⟩)`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::pulses::PulsePair;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Bare-state amplitudes `(c₁, c₂, c₃)`. The norm is not constrained to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector3(pub Vector3<C64>);

impl StateVector3 {
    pub fn new(c1: C64, c2: C64, c3: C64) -> Self {
        StateVector3(Vector3::new(c1, c2, c3))
    }

    pub fn real(c1: f64, c2: f64, c3: f64) -> Self {
        Self::new(c1.into(), c2.into(), c3.into())
    }

    /// `|n⟩` for `n` in `1..=3`.
    pub fn basis(n: usize) -> Self {
        let mut v = Vector3::zeros();
        v[n - 1] = C64::new(1.0, 0.0);
        StateVector3(v)
    }

    pub fn c(&self, n: usize) -> C64 {
        self.0[n - 1]
    }

    pub fn populations(&self) -> [f64; 3] {
        [
            self.0[0].norm_sqr(),
            self.0[1].norm_sqr(),
            self.0[2].norm_sqr(),
        ]
    }

    /// `|c₁|² + |c₂|² + |c₃|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::ParameterDomain(
                "cannot normalize a null state".into(),
            ));
        }
        Ok(StateVector3(self.0.unscale(n)))
    }
}

/// Adiabatic-basis amplitudes `(a₊, a₀, a₋)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticAmplitudes {
    pub a_plus: C64,
    pub a_zero: C64,
    pub a_minus: C64,
}

impl AdiabaticAmplitudes {
    fn from_vector(v: Vector3<C64>) -> Self {
        AdiabaticAmplitudes {
            a_plus: v[0],
            a_zero: v[1],
            a_minus: v[2],
        }
    }

    fn to_vector(self) -> Vector3<C64> {
        Vector3::new(self.a_plus, self.a_zero, self.a_minus)
    }
}

/// A dense complex 3×3 Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian3(pub Matrix3<C64>);

impl Hamiltonian3 {
    pub fn apply(&self, c: &StateVector3) -> StateVector3 {
        StateVector3(self.0 * c.0)
    }

    /// `(H − H†)/2`, the generator of norm change.
    pub fn anti_hermitian_part(&self) -> Matrix3<C64> {
        (self.0 - self.0.adjoint()).scale(0.5)
    }

    pub fn is_hermitian(&self) -> bool {
        self.0 == self.0.adjoint()
    }
}

/// `θ = atan2(Ωp, Ωs) ∈ [0, π/2]`.
pub fn mixing_angle(omega_p: f64, omega_s: f64) -> Result<f64> {
    if omega_p == 0.0 && omega_s == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    if omega_p < 0.0 || omega_s < 0.0 {
        return Err(Error::ParameterDomain(format!(
            "envelopes must be non-negative, got ({omega_p}, {omega_s})"
        )));
    }
    Ok(omega_p.atan2(omega_s))
}

/// `½[[−iγ, Ωp, 0], [Ωp, 0, Ωs], [0, Ωs, iγ]]`: loss on `|1⟩`, gain on `|3⟩`.
pub fn bare_hamiltonian(omega_p: f64, omega_s: f64, gamma: f64) -> Hamiltonian3 {
    let p = C64::from(0.5 * omega_p);
    let s = C64::from(0.5 * omega_s);
    let g = 0.5 * gamma * I;
    let z = C64::from(0.0);
    Hamiltonian3(Matrix3::new(-g, p, z, p, z, s, z, s, g))
}

/// Columns are `|Φ₊⟩, |Φ₀⟩, |Φ₋⟩` in the bare basis; `c = R a`.
pub fn rotation_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let k = FRAC_1_SQRT_2;
    Matrix3::new(
        k * s,
        c,
        k * s, //
        k,
        0.0,
        -k, //
        k * c,
        -s,
        k * c,
    )
}

/// Mixing angle, its rate, the rms coupling and the basis rotation at one
/// instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticFrame {
    pub theta: f64,
    pub theta_dot: f64,
    pub omega_rms: f64,
    pub rotation: Matrix3<f64>,
}

impl AdiabaticFrame {
    pub fn new(theta: f64, theta_dot: f64, omega_rms: f64) -> Self {
        AdiabaticFrame {
            theta,
            theta_dot,
            omega_rms,
            rotation: rotation_matrix(theta),
        }
    }

    /// Frame of `pair` at time `t`. Falls back to the pair's log-ratio when
    /// both envelopes underflow.
    pub fn at(pair: &dyn PulsePair, t: f64) -> Result<Self> {
        let (p, s) = (pair.pump(t), pair.stokes(t));
        let omega_rms = p.hypot(s);
        let scale = p.max(s);
        if scale > 0.0 {
            let theta = mixing_angle(p, s)?;
            let (pn, sn) = (p / scale, s / scale);
            let (dp, ds) = (pair.pump_deriv(t) / scale, pair.stokes_deriv(t) / scale);
            let theta_dot = (dp * sn - pn * ds) / (pn * pn + sn * sn);
            return Ok(Self::new(theta, theta_dot, omega_rms));
        }
        let r = pair.log_ratio(t);
        let rate = pair.pump_log_deriv(t) - pair.stokes_log_deriv(t);
        if !(r.is_finite() && rate.is_finite()) {
            return Err(Error::UndefinedAngle);
        }
        let theta = r.exp().atan();
        let theta_dot = rate * theta.sin() * theta.cos();
        Ok(Self::new(theta, theta_dot, omega_rms))
    }

    /// `γ = 2θ̇ / sin 2θ`, the rate that decouples `|Φ₀⟩`.
    pub fn cancelling_gamma(&self) -> Option<f64> {
        let s = (2.0 * self.theta).sin();
        (s != 0.0).then(|| 2.0 * self.theta_dot / s)
    }
}

/// `R⁻¹ H^γ R − i R⁻¹ Ṙ` in closed form.
///
/// The `(0,1)` and `(2,1)` entries carry `−iγ sin2θ/(2√2) + iθ̇/√2`, which
/// vanish for `γ = 2θ̇/sin 2θ`.
pub fn adiabatic_hamiltonian(frame: &AdiabaticFrame, gamma: f64) -> Hamiltonian3 {
    let (s2, c2) = (2.0 * frame.theta).sin_cos();
    let half_omega = C64::from(0.5 * frame.omega_rms);
    let diag_outer = I * (gamma * c2 / 4.0);
    let couple = gamma * s2 / (2.0 * SQRT_2);
    let drift = frame.theta_dot / SQRT_2;
    let upper = I * (drift - couple);
    let lower = -I * (drift + couple);
    Hamiltonian3(Matrix3::new(
        half_omega + diag_outer,
        upper,
        diag_outer,
        lower,
        -I * (gamma * c2 / 2.0),
        lower,
        diag_outer,
        upper,
        -half_omega + diag_outer,
    ))
}

/// `a = Rᵀ c`.
pub fn to_adiabatic(c: &StateVector3, theta: f64) -> AdiabaticAmplitudes {
    let r = rotation_matrix(theta).map(C64::from);
    AdiabaticAmplitudes::from_vector(r.transpose() * c.0)
}

/// `c = R a`.
pub fn from_adiabatic(a: &AdiabaticAmplitudes, theta: f64) -> StateVector3 {
    let r = rotation_matrix(theta).map(C64::from);
    StateVector3(r * a.to_vector())
}

/// `|Φ₀(θ)⟩ = cos θ |1⟩ − sin θ |3⟩`.
pub fn dark_state(theta: f64) -> StateVector3 {
    let (s, c) = theta.sin_cos();
    StateVector3::real(c, 0.0, -s)
}
