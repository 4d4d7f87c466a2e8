use criterion::{black_box, criterion_group, criterion_main, Criterion};
use csf_core::analysis::detect_features;
use csf_core::curve::circle;
use csf_core::exact::{trombone_initial, Direction, TromboneSpec};
use csf_core::flow::{step_parametric, FlowSnapshot, Scheme, StepOptions};
use csf_core::functionals::entropy;
use csf_core::spectral::{cutoff, default_rho, project, trombone_rescaled_sheet};
use csf_core::{geometry, resample_arclength, Point};

fn kernels(c: &mut Criterion) {
    let ring = circle(Point::default(), 1.0, 2048).unwrap();
    let snap = FlowSnapshot {
        t: 0.0,
        curve: ring.clone(),
        scheme: Scheme::SemiImplicit,
        dt: 0.0,
    };
    let opts = StepOptions::default();
    c.bench_function("semi-implicit step, 2048 points", |b| {
        b.iter(|| step_parametric(black_box(&snap), 1e-4, &opts).unwrap())
    });
    c.bench_function("geometry, 2048 points", |b| b.iter(|| geometry(black_box(&ring)).unwrap()));
    c.bench_function("resample, 2048 points", |b| b.iter(|| resample_arclength(black_box(&ring), 2048).unwrap()));
    c.bench_function("entropy, circle", |b| b.iter(|| entropy(black_box(&ring)).unwrap()));

    let spec = TromboneSpec::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.0], Direction::Left).unwrap();
    let trombone = trombone_initial(&spec, -50.0).unwrap();
    c.bench_function("feature detection, trombone", |b| {
        b.iter(|| detect_features(black_box(&trombone), Point::default()).unwrap())
    });
    c.bench_function("spectral projection, trombone sheet", |b| {
        b.iter(|| {
            let s = trombone_rescaled_sheet(&spec, 1, -9.0, default_rho(-9.0, 0.4), 4001).unwrap();
            project(&cutoff(&s).unwrap()).unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = kernels
}
criterion_main!(benches);
