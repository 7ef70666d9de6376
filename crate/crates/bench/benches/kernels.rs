use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use stirap_core::bpm::{
    bpm_propagate, mode_at, BpmConfig, ChannelProfile, OpticalParams, WaveguideLayout,
};
use stirap_core::{
    make_gaussian_pair, make_sech_pair, propagate, synthesize_gamma, GaussianParams, InitialState,
    PropagationConfig, SechParams, SharedPair,
};

fn gaussian() -> SharedPair {
    Arc::new(make_gaussian_pair(
        GaussianParams::new(1.3, 1.0, 1.0).unwrap(),
    ))
}

fn gamma_eval(c: &mut Criterion) {
    let gauss = synthesize_gamma(gaussian());
    let sech = synthesize_gamma(Arc::new(make_sech_pair(
        SechParams::new(1.3, 1.0, 3.0).unwrap(),
    )));
    c.bench_function("gamma/gaussian 1001 points", |b| {
        b.iter(|| {
            (0..=1000)
                .map(|i| gauss.gamma(-5.0 + 0.01 * i as f64).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("gamma/sech 1001 points", |b| {
        b.iter(|| {
            (0..=1000)
                .map(|i| sech.gamma(-5.0 + 0.01 * i as f64).unwrap())
                .sum::<f64>()
        })
    });
}

fn rk4(c: &mut Criterion) {
    let pair = gaussian();
    let cfg = PropagationConfig::default_for(1.0).with_stride(100);
    let c0 = InitialState::DarkState
        .resolve(pair.as_ref(), cfg.t_start)
        .unwrap();
    let gain = synthesize_gamma(pair.clone());
    let mut g = c.benchmark_group("propagate");
    g.bench_function("hermitian", |b| {
        b.iter(|| propagate(pair.as_ref(), None, black_box(&c0), &cfg).unwrap())
    });
    g.bench_function("nh", |b| {
        b.iter(|| propagate(pair.as_ref(), Some(&gain), black_box(&c0), &cfg).unwrap())
    });
    g.finish();
}

fn bpm(c: &mut Criterion) {
    let channel = ChannelProfile::new(7e-3, 2.0, 2.0, 0.0).unwrap();
    let optics = OpticalParams::new(0.514, 2.33).unwrap();
    let grid = BpmConfig::default_grid();
    let input = mode_at(&channel, &optics, &grid, -3.15).unwrap().field;
    let layout = WaveguideLayout::pair(6.3);
    let cfg = BpmConfig::new(grid, 1000.0, 1.0);
    let mut g = c.benchmark_group("bpm");
    g.sample_size(10);
    g.bench_function("two guides, 1 mm", |b| {
        b.iter(|| bpm_propagate(&layout, &channel, &optics, black_box(&input), &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, gamma_eval, rk4, bpm);
criterion_main!(benches);
