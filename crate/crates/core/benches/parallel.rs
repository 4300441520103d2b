//! Sequential versus data-parallel timings for the three map-heavy phases:
//! theta-ideal assembly, the equivariance sweep, and operator-span
//! construction. The parallel side uses the same code paths with the
//! runtime switch enabled; outputs are identical either way.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hecke_forge::cli::{self, RSpec, SuiteConfig};
use hecke_forge::gf::Gf;
use hecke_forge::hecke::OperatorWord;
use hecke_forge::localfield::{FieldMode, LocalField};
use hecke_forge::par;
use hecke_forge::weights::{self, WeightProfile};

fn bench_theta_ideal(c: &mut Criterion) {
    let gf = Gf::lex_least(3, 2).unwrap();
    let profile = WeightProfile::new(3, 2, vec![9, 13]);
    let mut group = c.benchmark_group("theta_ideal");
    for (label, on) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &on, |b, &on| {
            par::set_parallel(on);
            b.iter(|| weights::theta_ideal(&gf, &profile).unwrap());
        });
    }
    group.finish();
    par::set_parallel(false);
}

fn bench_equivariance_sweep(c: &mut Criterion) {
    let gf = Gf::lex_least(3, 2).unwrap();
    let profile = WeightProfile::new(3, 2, vec![9, 13]);
    let mut group = c.benchmark_group("borel_equivariance_sweep");
    group.sample_size(10);
    for (label, on) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &on, |b, &on| {
            par::set_parallel(on);
            let ctx = weights::ComparisonCtx::new(&gf, profile.clone()).unwrap();
            let gens = weights::borel_and_w(&gf);
            b.iter(|| {
                weights::equivariance_first_failure(&ctx, &ctx.iotap_classes, &gens).unwrap()
            });
        });
    }
    group.finish();
    par::set_parallel(false);
}

fn bench_operator_span(c: &mut Criterion) {
    let lf = LocalField::qp(5).unwrap();
    let gf = &lf.gf;
    let words = vec![
        OperatorWord::tm10(),
        OperatorWord::t12().add(gf, &OperatorWord::t10()).square(gf),
    ];
    let mut group = c.benchmark_group("operator_span_depth2");
    group.sample_size(10);
    for (label, on) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &on, |b, &on| {
            par::set_parallel(on);
            b.iter(|| {
                hecke_forge::hecke::OperatorSpan::build(&lf, words.clone(), 2, true)
                    .span
                    .rank()
            });
        });
    }
    group.finish();
    par::set_parallel(false);
}

fn bench_relations_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("relations_depth2_q9");
    group.sample_size(10);
    for (label, on) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &on, |b, &on| {
            let config = SuiteConfig {
                p: 3,
                f: 2,
                r: RSpec::Zero,
                depth: 2,
                mode: FieldMode::EqualChar,
                parallel: on,
                ..SuiteConfig::default()
            };
            b.iter(|| {
                par::set_parallel(on);
                cli::relations_suite(&config).unwrap()
            });
        });
    }
    group.finish();
    par::set_parallel(false);
}

criterion_group!(
    benches,
    bench_theta_ideal,
    bench_equivariance_sweep,
    bench_operator_span,
    bench_relations_suite
);
criterion_main!(benches);
