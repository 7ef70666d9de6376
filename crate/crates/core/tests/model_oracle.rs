//! The closed-form adiabatic Hamiltonian against a brute-force similarity
//! transform with a finite-difference rotation rate.

use std::sync::Arc;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stirap_core::{
    adiabatic_hamiltonian, bare_hamiltonian, make_gaussian_pair, make_sech_pair, mixing_angle,
    rotation_matrix, synthesize_gamma, AdiabaticFrame, GaussianParams, PulsePair, SechParams,
    SharedPair, C64,
};

fn numeric_adiabatic(pair: &dyn PulsePair, t: f64, gamma: f64, h: f64) -> Matrix3<C64> {
    let theta = |t: f64| mixing_angle(pair.pump(t), pair.stokes(t)).unwrap();
    let r = rotation_matrix(theta(t)).map(C64::from);
    let r_dot = ((rotation_matrix(theta(t + h)) - rotation_matrix(theta(t - h))) / (2.0 * h))
        .map(C64::from);
    let hb = bare_hamiltonian(pair.pump(t), pair.stokes(t), gamma).0;
    let rt = r.transpose();
    rt * hb * r - rt * r_dot * C64::new(0.0, 1.0)
}

fn random_pair(rng: &mut ChaCha8Rng) -> SharedPair {
    let omega0 = rng.gen_range(0.5..20.0);
    let tau = rng.gen_range(0.0..3.0);
    if rng.gen_bool(0.5) {
        Arc::new(make_gaussian_pair(
            GaussianParams::new(omega0, 1.0, tau).unwrap(),
        ))
    } else {
        Arc::new(make_sech_pair(SechParams::new(omega0, 1.0, tau).unwrap()))
    }
}

#[test]
fn closed_form_matches_similarity_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..100 {
        let pair = random_pair(&mut rng);
        let t = rng.gen_range(-2.5..2.5);
        let gamma = if rng.gen_bool(0.5) {
            synthesize_gamma(pair.clone()).gamma(t).unwrap()
        } else {
            rng.gen_range(-3.0..3.0)
        };
        let frame = AdiabaticFrame::at(pair.as_ref(), t).unwrap();
        let closed = adiabatic_hamiltonian(&frame, gamma).0;
        let numeric = numeric_adiabatic(pair.as_ref(), t, gamma, h);
        let err = (closed - numeric)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(
            err < 1e-6,
            "t = {t}, gamma = {gamma}: max entry error {err:e}"
        );
    }
}

#[test]
fn cancelling_rate_removes_dark_state_couplings() {
    let pairs: [SharedPair; 2] = [
        Arc::new(make_gaussian_pair(
            GaussianParams::new(1.3, 1.0, 1.0).unwrap(),
        )),
        Arc::new(make_sech_pair(SechParams::new(6.0, 1.0, 3.0).unwrap())),
    ];
    for pair in pairs {
        let gain = synthesize_gamma(pair.clone());
        for i in 0..1000 {
            let t = -5.0 + 10.0 * i as f64 / 999.0;
            let frame = AdiabaticFrame::at(pair.as_ref(), t).unwrap();
            let h = adiabatic_hamiltonian(&frame, gain.gamma(t).unwrap()).0;
            assert!(h[(0, 1)].norm() < 1e-12, "t = {t}: {}", h[(0, 1)]);
            assert!(h[(2, 1)].norm() < 1e-12, "t = {t}: {}", h[(2, 1)]);
        }
    }
}
