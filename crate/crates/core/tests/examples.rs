use invexkit::expr::ExprFn;
use invexkit::fixtures::{load_example, scalar_cases, vector_cases};
use invexkit::fop::{
    check_nondominated, kkt_sweep, run_theorem, AlphaScope, MultiplierMode, NondomMode, NondomReading, TheoremId,
    TheoremPipeline,
};
use invexkit::invexity::{certify_scalar, CertifyOptions, PairSet, Property};
use invexkit::kkt::{MultiplierSet, KKT_TOL};
use invexkit::nonsmooth::{clarke_subdiff_1d, estimate_per_radius, PiecewiseFn};
use invexkit::pareto::{from_piecewise, front_of, scalarization_audit, stationarity_weights, Dominance, Vmp};
use invexkit::problem::Problem;

fn example(name: &str) -> Problem {
    load_example(name).unwrap().unwrap()
}

fn pipeline(p: &Problem, id: TheoremId, scope: AlphaScope) -> TheoremPipeline {
    let m = MultiplierSet {
        lambda: p.lambda.unwrap(),
        mu: p.mu.clone().unwrap(),
        theta: p.theta.clone().unwrap_or_default(),
    };
    let mut tp = TheoremPipeline::new(id, p.eta.clone().unwrap(), MultiplierMode::Verify(m));
    tp.beta_objective = p.beta_objective.clone();
    tp.beta_constraints = p.beta_constraints.clone();
    tp.scope = scope;
    tp
}

#[test]
fn asserted_conclusions_survive_the_oracle() {
    let cases = [
        ("ex1", TheoremId::T37),
        ("ex1", TheoremId::T38),
        ("ex1", TheoremId::T64),
        ("ex2", TheoremId::T62),
        ("ex2", TheoremId::T63),
        ("ex3", TheoremId::T64),
        ("ex3", TheoremId::T65),
    ];
    for (name, id) in cases {
        let p = example(name);
        let mut tp = pipeline(&p, id, AlphaScope::All);
        if tp.beta_objective.is_none() {
            tp.beta_objective = Some(invexkit::invexity::BetaVector::ones(2));
        }
        let r = run_theorem(&p.spec, 0.0, &tp).unwrap();
        assert!(r.hypotheses_passed, "{name} {id}: {:?}", r.failed_at);
        assert!(r.oracle.passed && r.oracle.agrees, "{name} {id}");
    }
}

#[test]
fn all_level_conclusion_covers_each_single_level() {
    let p = example("ex2");
    let all = run_theorem(&p.spec, 0.0, &pipeline(&p, TheoremId::T63, AlphaScope::All)).unwrap();
    assert_eq!(all.conclusion.as_deref(), Some("f-nondominated"));
    for &a in &p.spec.alpha_grid {
        let single = run_theorem(&p.spec, 0.0, &pipeline(&p, TheoremId::T62, AlphaScope::Single(a))).unwrap();
        assert_eq!(single.conclusion.as_deref(), Some("weakly f-nondominated"), "alpha = {a}");
    }
    let weak = check_nondominated(&p.spec, 0.0, NondomMode::Weak, NondomReading::ForAllAlpha).unwrap();
    assert!(weak.passed);
}

#[test]
fn endpoints_stay_ordered_on_every_level() {
    for name in ["ex1", "ex2", "ex3"] {
        let p = example(name);
        for &a in &p.spec.alpha_grid {
            let t = p.spec.endpoint_table(a).unwrap();
            assert!(t.values.iter().all(|v| v[0] <= v[1]), "{name} alpha = {a}");
        }
    }
}

#[test]
fn example1_objective_is_invex_at_the_candidate() {
    let p = example("ex1");
    let xs = p.spec.feasible_grid();
    let eta = p.eta.clone().unwrap();
    for &a in &p.spec.alpha_grid {
        let (fl, fr) = p.spec.objective.endpoint_fns(a).unwrap();
        for f in [&fl, &fr] {
            let v = certify_scalar(Property::Invex, f, &eta, &PairSet::at(0.0, &xs), &CertifyOptions::default()).unwrap();
            assert!(v.passed, "alpha = {a}");
        }
    }
}

#[test]
fn example1_sweep_on_uneven_levels() {
    let mut p = example("ex1");
    p.spec.alpha_grid = vec![0.0, 0.013, 0.5, 0.749, 0.75, 0.751, 0.999, 1.0];
    let m = MultiplierSet { lambda: (0.25, 0.75), mu: vec![0.4], theta: vec![] };
    for (a, r) in kkt_sweep(&p.spec, 0.0, &MultiplierMode::Verify(m), KKT_TOL).unwrap() {
        assert!(r.feasible && r.residual <= 1e-9, "alpha = {a}");
        let c = p.spec.objective.weighted_coefficient(a, (0.25, 0.75)).unwrap();
        let closed = if a <= 0.75 { 3.0 - 2.0 * a / 3.0 } else { 4.0 - 2.0 * a };
        assert!((c - closed).abs() <= 1e-12 && c >= 2.0, "alpha = {a}: {c} vs {closed}");
    }
}

#[test]
fn estimates_converge_at_kinks() {
    let s = example("ex1").spec.objective.shape;
    let s = PiecewiseFn::new("s", s.expr().clone(), (-1.0, 1.0)).unwrap();
    let abs = PiecewiseFn::parse("abs", "abs(x)", (-1.0, 1.0)).unwrap();
    let g2 = example("ex2").spec.ineq[1].clone();
    let radii: Vec<f64> = (2..=7).map(|k| 10f64.powi(-k)).collect();
    for f in [&s, &abs, &g2] {
        let (lo, hi) = clarke_subdiff_1d(f, 0.0).unwrap().bounds().unwrap();
        let hulls = estimate_per_radius(|y: &[f64]| f.eval(y[0]), &[0.0], &radii, 64, 7).unwrap();
        let errs: Vec<f64> = hulls
            .iter()
            .map(|h| {
                let (a, b) = h.bounds().unwrap();
                (a - lo).abs().max((b - hi).abs())
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-4, "{}: {errs:?}", f.name());
        }
        assert!(*errs.last().unwrap() <= 1e-4, "{}: {errs:?}", f.name());
    }
}

#[test]
fn weak_front_matches_stationarity_on_v_invex_fixtures() {
    for c in vector_cases().into_iter().filter(|c| c.property == Property::VInvex && c.expect_pass) {
        let vmp = Vmp::new(c.fns.iter().map(from_piecewise).collect(), vec![c.grid.clone()]);
        let weak = front_of(&vmp.evaluate(), Dominance::Weak);
        for &u in &c.grid {
            let subs: Vec<_> = c.fns.iter().map(|f| clarke_subdiff_1d(f, u).unwrap()).collect();
            let stationary = stationarity_weights(&subs).unwrap().is_some();
            assert_eq!(weak.contains(&[u]), stationary, "{} at u = {u}", c.name);
        }
    }
}

#[test]
fn convex_fixture_fronts_match_weighted_sums_both_ways() {
    let weights: Vec<Vec<f64>> = (0..=20).map(|k| vec![k as f64 / 20.0, 1.0 - k as f64 / 20.0]).collect();
    for c in vector_cases().into_iter().filter(|c| c.property == Property::VInvex && c.expect_pass) {
        let vmp = Vmp::new(c.fns.iter().map(from_piecewise).collect(), vec![c.grid.clone()]);
        let audit = scalarization_audit(&vmp, &weights, true).unwrap();
        assert!(audit.passed, "{}: {audit:?}", c.name);
    }
}

#[test]
fn invex_fixtures_have_global_stationary_points() {
    for c in scalar_cases().into_iter().filter(|c| c.property == Property::Invex && c.expect_pass) {
        for s in invexkit::invexity::stationary_points(&c.f, &c.grid, 1e-9).unwrap() {
            assert!(s.is_global_min, "{}: {s:?}", c.name);
        }
    }
}

#[test]
fn fixture_expressions_reprint_identically() {
    let mut exprs: Vec<ExprFn> = Vec::new();
    for name in ["ex1", "ex2", "ex3"] {
        let p = example(name);
        exprs.push(p.spec.objective.shape.expr().clone());
        exprs.extend(p.spec.ineq.iter().chain(&p.spec.eq).map(|g| g.expr().clone()));
    }
    exprs.extend(scalar_cases().iter().map(|c| c.f.expr().clone()));
    exprs.extend(vector_cases().iter().flat_map(|c| c.fns.iter().map(|f| f.expr().clone())));
    for e in exprs {
        let again = ExprFn::parse(&e.to_string()).unwrap();
        assert_eq!(again.root(), e.root(), "{e}");
    }
}
