use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ellipse_calib::inference::eta_from_variance;
use ellipse_calib::{
    run_calibration, CalibrationConfig, FadingParams, NoiseModel, PmfState, TransitionKernel, UserType, Vec2,
};
use ellipse_calib_bench::{intersection_ellipse, walk};

fn fading() -> FadingParams {
    FadingParams::new(-2.5, 0.015, UserType::Pedestrian).unwrap()
}

fn geometry(c: &mut Criterion) {
    let e = intersection_ellipse();
    c.bench_function("arc_length_full", |b| {
        b.iter(|| black_box(&e).arc_length(black_box(5.0)).unwrap())
    });
    c.bench_function("arc_to_point", |b| {
        b.iter(|| black_box(&e).arc_to_point(black_box(61.3)).unwrap())
    });
    c.bench_function("point_to_arc", |b| {
        b.iter(|| black_box(&e).point_to_arc(black_box(Vec2::new(7.0, 11.0))))
    });
}

fn filter_steps(c: &mut Criterion) {
    let e = intersection_ellipse();
    let state = PmfState::new(&e, 0.05).unwrap();
    let n = state.len();
    for (name, eta) in [
        ("predict_narrow", eta_from_variance(e.circumference, 1e-8)),
        ("predict_wide", 50.0),
    ] {
        let kernel = TransitionKernel::new(n, eta).unwrap();
        c.bench_function(name, |b| {
            let mut s = state.clone();
            b.iter(|| s.predict(black_box(&kernel)))
        });
    }
    let m = walk(10)[3];
    let noise = NoiseModel::location_dependent(0.8749, 2.5683, 0.0865).unwrap();
    let f = fading();
    c.bench_function("update", |b| {
        b.iter_batched_ref(
            || state.clone(),
            |s| s.update(black_box(&m), &f, &noise).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    c.bench_function("mmse", |b| b.iter(|| black_box(&state).mmse()));
}

fn full_run(c: &mut Criterion) {
    let e = intersection_ellipse();
    let ms = walk(1350);
    let noise = NoiseModel::location_dependent(0.8749, 2.5683, 0.0865).unwrap();
    let cfg = CalibrationConfig {
        dx: 0.05,
        eta: eta_from_variance(e.circumference, 1e-8),
        gate_distance: 1.29,
        record_weights: false,
    };
    let f = fading();
    let mut group = c.benchmark_group("calibration");
    group.sample_size(10);
    group.bench_function("walk_1350_steps", |b| {
        b.iter(|| run_calibration(&e, black_box(&ms), &f, &noise, &cfg, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, geometry, filter_steps, full_run);
criterion_main!(benches);
