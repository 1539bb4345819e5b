use criterion::{criterion_group, criterion_main, Criterion};
use symbiosis_core::rng::{stream, Phase};
use symbiosis_core::theory::verify::random_instance;
use symbiosis_core::theory::{bias_closed_form, brute_force_bias};
use symbiosis_core::DesignKind;

fn theory(c: &mut Criterion) {
    let mut rng = stream(5, Phase::Theory);
    let mut inst = random_instance(&mut rng);
    while inst.n() < 10 {
        inst = random_instance(&mut rng);
    }
    c.bench_function("closed_form_n10", |b| {
        b.iter(|| bias_closed_form(&inst, DesignKind::Naive).unwrap())
    });
    c.bench_function("brute_force_n10", |b| {
        b.iter(|| brute_force_bias(&inst, DesignKind::Naive).unwrap())
    });
}

criterion_group!(benches, theory);
criterion_main!(benches);
