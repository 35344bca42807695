use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use falcon_core::{
    coarse_mass, falpha_derivative, falpha_integral, gamma_dimension, solve_ivp, CantorSetSpec,
    ConstCoeffFDE, InitialConditions, Profile, SampledFunction, StaircaseEvaluator,
};

fn staircase(c: &mut Criterion) {
    let ev = StaircaseEvaluator::exact(CantorSetSpec::middle_third()).unwrap();
    let xs: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
    c.bench_function("staircase_exact_1000", |b| {
        b.iter(|| xs.iter().map(|&x| ev.staircase(black_box(x)).unwrap()).sum::<f64>())
    });
    c.bench_function("staircase_inverse_1000", |b| {
        let n = ev.normalization();
        b.iter(|| {
            xs.iter()
                .map(|&t| ev.staircase_inverse(black_box(t * n)).unwrap())
                .sum::<f64>()
        })
    });
}

fn mass(c: &mut Criterion) {
    let spec = CantorSetSpec::middle_third();
    let alpha = 2f64.ln() / 3f64.ln();
    c.bench_function("coarse_mass_delta_3^-10", |b| {
        b.iter(|| coarse_mass(&spec, 0.0, 1.0, black_box(alpha), 3f64.powi(-10)).unwrap())
    });
    let mut group = c.benchmark_group("dimension");
    group.sample_size(10);
    group.bench_function("gamma_dimension_middle_third", |b| {
        b.iter(|| gamma_dimension(black_box(&spec), 0.0, 1.0).unwrap())
    });
    group.finish();
}

fn calculus(c: &mut Criterion) {
    let ev = StaircaseEvaluator::exact(CantorSetSpec::middle_third()).unwrap();
    let g: Profile = "s^2*exp(-0.5*s) + 3*sin(2*s)".parse().unwrap();
    let f = SampledFunction::of_profile(g.clone(), &ev);
    c.bench_function("falpha_derivative_depth10", |b| {
        b.iter(|| falpha_derivative(&f, &ev, black_box(0.3), 10).unwrap())
    });
    c.bench_function("falpha_integral_2^10_pieces", |b| {
        b.iter(|| falpha_integral(&f, &ev, 0.0, 1.0, black_box(10)).unwrap())
    });
    c.bench_function("profile_differentiate", |b| b.iter(|| black_box(&g).differentiate()));
}

fn solving(c: &mut Criterion) {
    let ev = StaircaseEvaluator::power_law(CantorSetSpec::middle_third())
        .with_alpha(0.63)
        .unwrap();
    let eq = ConstCoeffFDE::new(16.0, -8.0, 145.0).unwrap();
    let ic = InitialConditions::new(0.0, -2.0, 1.0);
    c.bench_function("solve_ivp_complex_pair", |b| {
        b.iter(|| solve_ivp(black_box(&eq), &ic, &ev).unwrap())
    });
}

criterion_group!(benches, staircase, mass, calculus, solving);
criterion_main!(benches);
