//! Waveguide propagation on the paper geometry.

use std::sync::OnceLock;

use stirap_core::bpm::{
    bpm_propagate, fundamental_mode, BpmConfig, ExperimentSetup, Grid, GuideExperiment,
    WaveguideLayout,
};

fn experiment() -> &'static (GuideExperiment, ExperimentSetup) {
    static CELL: OnceLock<(GuideExperiment, ExperimentSetup)> = OnceLock::new();
    CELL.get_or_init(|| {
        let exp = GuideExperiment::default();
        let setup = exp.prepare().expect("calibration");
        (exp, setup)
    })
}

#[test]
fn straight_guide_conserves_power_over_full_length() {
    let exp = GuideExperiment::default();
    let ch = exp.channel.with_dn_i(0.0);
    let input = fundamental_mode(&ch, &exp.optics, &exp.grid).unwrap().field;
    let cfg = BpmConfig::new(exp.grid, exp.length, exp.dz).with_stride(1000);
    let run = bpm_propagate(
        &WaveguideLayout::single(0.0),
        &ch,
        &exp.optics,
        &input,
        &cfg,
    )
    .unwrap();
    for s in &run.samples {
        assert!((s.total - 1.0).abs() < 1e-4, "z = {}: {}", s.z, s.total);
    }
}

#[test]
fn coupling_calibration_is_exponential() {
    let (_, setup) = experiment();
    let fit = setup.coupling.fit;
    assert!(fit.r_squared >= 0.99, "R^2 = {}", fit.r_squared);
    assert!(fit.law.k > 0.0);
    // Closest approach sits between the calibrated separations.
    assert!(setup.d_min > 5.95 && setup.d_min < 7.0);
}

#[test]
fn loss_calibration_hits_target_rate() {
    let (_, setup) = experiment();
    let loss = setup.loss.unwrap();
    assert!(loss.relative_error < 0.02, "{loss:?}");
    assert!((setup.gamma * 1e4 - 2.857).abs() < 1e-3);
}

#[test]
fn hermitian_run_conserves_power() {
    let (exp, setup) = experiment();
    let run = exp.run(setup, false).unwrap();
    for s in &run.samples {
        assert!((s.total - 1.0).abs() < 1e-4, "z = {}: {}", s.z, s.total);
    }
}

#[test]
fn step_halving_changes_final_powers_little() {
    let (exp, setup) = experiment();
    let coarse = exp.run(setup, false).unwrap();
    let fine = GuideExperiment {
        dz: exp.dz / 2.0,
        record_stride: 2 * exp.record_stride,
        ..exp.clone()
    };
    let fine = fine.run(setup, false).unwrap();
    for (a, b) in coarse
        .final_sample()
        .channels
        .iter()
        .zip(&fine.final_sample().channels)
    {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn grid_refinement_changes_transfer_little() {
    let (exp, setup) = experiment();
    let coarse = exp.run(setup, false).unwrap();
    let grid = Grid {
        dx: exp.grid.dx / 2.0,
        n: exp.grid.n * 2,
        ..exp.grid
    };
    let fine = GuideExperiment {
        grid,
        dz: exp.dz / 2.0,
        record_stride: 2 * exp.record_stride,
        ..exp.clone()
    };
    let fine = fine.run(setup, false).unwrap();
    let (a, b) = (
        coarse.final_sample().channels[2],
        fine.final_sample().channels[2],
    );
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}
