use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use invexkit::exec::{set_mode, Mode};
use invexkit::fixtures::load_example;
use invexkit::fop::{check_nondominated, run_theorem, MultiplierMode, NondomMode, NondomReading, TheoremId, TheoremPipeline};
use invexkit::grid::linspace;
use invexkit::invexity::{certify_scalar, CertifyOptions, PairMap, PairSet, Property};
use invexkit::kkt::MultiplierSet;
use invexkit::nonsmooth::PiecewiseFn;

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn certification(c: &mut Criterion) {
    let f = PiecewiseFn::parse("f", "x^3 + x", (-2.0, 2.0)).unwrap();
    let eta = PairMap::parse("(x^3 + x - u^3 - u) / (3*u^2 + 1)").unwrap();
    let pairs = PairSet::square(&linspace(-2.0, 2.0, 201));
    let opts = CertifyOptions::default();
    let mut g = c.benchmark_group("certify_invex_201x201");
    for (name, mode) in MODES {
        set_mode(mode);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| certify_scalar(Property::Invex, &f, &eta, &pairs, &opts).unwrap())
        });
    }
    g.finish();
}

fn nondominance(c: &mut Criterion) {
    let p = load_example("ex1").unwrap().unwrap();
    let mut g = c.benchmark_group("nondominance_ex1");
    for (name, mode) in MODES {
        set_mode(mode);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| check_nondominated(&p.spec, 0.0, NondomMode::Strict, NondomReading::ForAllAlpha).unwrap())
        });
    }
    g.finish();
}

fn theorem(c: &mut Criterion) {
    let p = load_example("ex2").unwrap().unwrap();
    let m = MultiplierSet { lambda: p.lambda.unwrap(), mu: p.mu.clone().unwrap(), theta: vec![] };
    let mut tp = TheoremPipeline::new(TheoremId::T63, p.eta.clone().unwrap(), MultiplierMode::Verify(m));
    tp.beta_objective = p.beta_objective.clone();
    tp.beta_constraints = p.beta_constraints.clone();
    let mut g = c.benchmark_group("theorem_t63_ex2");
    g.sample_size(20);
    for (name, mode) in MODES {
        set_mode(mode);
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_theorem(&p.spec, 0.0, &tp).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, certification, nondominance, theorem);
criterion_main!(benches);
