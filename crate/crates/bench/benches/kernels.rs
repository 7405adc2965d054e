use std::hint::black_box;

use cdlift_core::dynamics::state_derivative;
use cdlift_core::lqg::{linearize, synthesize_gains};
use cdlift_core::sim::run;
use cdlift_core::sim::scenario::hover_scenario;
use cdlift_core::tension::{allocate_tensions, cable_directions, load_direction};
use cdlift_core::{AgentState, ControlInput, NoiseModel, QuadParams};
use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;

fn hover_point() -> (AgentState, ControlInput, QuadParams) {
    let params = QuadParams::reference();
    let state = AgentState::at_rest(Vector3::new(0.0, 0.0, 50.0));
    let input = ControlInput::new(params.mass * params.gravity, Vector3::zeros());
    (state, input, params)
}

fn derivative(c: &mut Criterion) {
    let (state, input, params) = hover_point();
    let cable = Vector3::new(0.1, -0.2, -4.9);
    c.bench_function("state_derivative", |b| {
        b.iter(|| state_derivative(black_box(&state), black_box(&input), &cable, &params).unwrap())
    });
}

fn gains(c: &mut Criterion) {
    let (state, input, params) = hover_point();
    let model = linearize(&state, &input, &params, &Vector3::zeros(), 0.0, 1.0).unwrap();
    let noise = NoiseModel::reference();
    c.bench_function("linearize", |b| {
        b.iter(|| linearize(black_box(&state), &input, &params, &Vector3::zeros(), 0.0, 1.0).unwrap())
    });
    c.bench_function("care_and_fare", |b| {
        b.iter(|| synthesize_gains(black_box(&model), &noise).unwrap())
    });
}

fn allocation(c: &mut Criterion) {
    // Twenty cables fanning out above the load.
    let quads: Vec<_> = (0..20)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / 20.0;
            Vector3::new(8.0 * a.cos(), 8.0 * a.sin(), 40.0)
        })
        .collect();
    let payload = Vector3::zeros();
    let accel = Vector3::new(0.3, -0.1, 0.2);
    c.bench_function("tension_allocation_20", |b| {
        b.iter(|| {
            let dirs = cable_directions(black_box(&quads), &payload).unwrap();
            let (n_p, load) = load_direction(&accel, 10.0, 9.81).unwrap();
            allocate_tensions(dirs, &n_p, load).unwrap()
        })
    });
}

fn mission(c: &mut Criterion) {
    let mut config = hover_scenario(1.0);
    config.noise_enabled = true;
    let mut group = c.benchmark_group("mission");
    group.sample_size(10);
    group.bench_function("hover_1s", |b| b.iter(|| run(black_box(&config)).unwrap()));
    group.finish();
}

criterion_group!(benches, derivative, gains, allocation, mission);
criterion_main!(benches);
