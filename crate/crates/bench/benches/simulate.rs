use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tilesa::optimize::minimize_error_numeric;
use tilesa::ktam::Model;
use tilesa::{ConcentrationVector, ErrorObjective, KineticParams, SimOptions, Simulator};
use tilesa_bench::{builtin, xy_kinetics};

fn kinetic_a1(c: &mut Criterion) {
    let (system, reference) = builtin("A1");
    let (conc, params) = xy_kinetics(5.0, 9.0);
    let options = SimOptions {
        max_events: Some(50_000_000),
        ..SimOptions::default()
    };
    let sim = Simulator::with_reference(&system, reference, &conc, &params, options).unwrap();
    let mut run = 0;
    c.bench_function("kinetic A1 run at 5:1", |b| {
        b.iter(|| {
            run += 1;
            black_box(sim.run(1, run))
        })
    });
}

fn irreversible_chain(c: &mut Criterion) {
    let (system, reference) = builtin("chain");
    let conc = ConcentrationVector::new([("C", 1.0)]).unwrap();
    let params = KineticParams::new(1.0, 1.0, 15.0, 1.0, 1.0).unwrap();
    let options = SimOptions {
        model: Model::Irreversible,
        ..SimOptions::default()
    };
    let sim = Simulator::with_reference(&system, reference, &conc, &params, options).unwrap();
    let mut run = 0;
    c.bench_function("irreversible chain run", |b| {
        b.iter(|| {
            run += 1;
            black_box(sim.run(1, run))
        })
    });
}

fn numeric_optimum(c: &mut Criterion) {
    let k = 10;
    let counts: Vec<f64> = (1..=k).map(|i| (i * i * 7) as f64).collect();
    let eps = ndarray::Array2::from_shape_fn((k, k), |(i, j)| if i == j { 0.0 } else { 1e-3 * (1 + (i + j) % 5) as f64 });
    let obj = ErrorObjective::new((0..k).map(|i| format!("T{i}")).collect(), counts, eps).unwrap();
    let init = vec![1.0 / k as f64; k];
    c.bench_function("numeric optimum, 10 tiles", |b| {
        b.iter(|| black_box(minimize_error_numeric(&obj, &init, 1e-10).unwrap()))
    });
}

criterion_group!(benches, kinetic_a1, irreversible_chain, numeric_optimum);
criterion_main!(benches);
