//! Acceptance criteria, one PASS/FAIL line per clause.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1`
//! to see the lines in order.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use invexkit::fixtures::{load_example, scalar_cases, vector_cases};
use invexkit::fop::{
    check_nondominated, kkt_sweep, run_theorem, MultiplierMode, NondomMode, NondomReading, TheoremPipeline,
};
use invexkit::grid::linspace;
use invexkit::invexity::{certify_scalar, certify_vector, CertifyOptions, PairSet, Property};
use invexkit::kkt::{kkt_solve, kkt_verify, KktInstance, LambdaMode, MultiplierSet, KKT_TOL};
use invexkit::nonsmooth::{clarke_subdiff_1d, default_radii, estimate_limiting_gradients, PiecewiseFn, Polytope};
use invexkit::pareto::{
    from_piecewise, front_of, pareto_front, stationarity_weights, univariate, weighted_argmin, Dominance, Vmp,
};
use invexkit::problem::Problem;

const RUNTIME_BUDGET: Duration = Duration::from_secs(5);

/// Collects clause verdicts and prints them as they arrive.
struct Criterion {
    id: &'static str,
    failed: Vec<String>,
}

impl Criterion {
    fn new(id: &'static str) -> Criterion {
        Criterion { id, failed: Vec::new() }
    }

    fn check(&mut self, clause: &str, ok: bool, detail: impl AsRef<str>) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {} :: {clause} :: {}", self.id, detail.as_ref());
        if !ok {
            self.failed.push(clause.to_string());
        }
    }

    fn failed(&self) -> Vec<&str> {
        self.failed.iter().map(String::as_str).collect()
    }
}

fn example(name: &str) -> Problem {
    load_example(name).unwrap().unwrap()
}

fn invexkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invexkit")).args(args).output().expect("binary runs")
}

/// Runs `run-example` through the binary, returning the report and wall time.
fn run_example(name: &str) -> (i32, Value, Duration) {
    let t = Instant::now();
    let out = invexkit(&["run-example", name, "--no-timings"]);
    let elapsed = t.elapsed();
    let report = serde_json::from_slice(&out.stdout).expect("report is JSON");
    (out.status.code().unwrap(), report, elapsed)
}

fn fixed_multipliers(p: &Problem) -> MultiplierSet {
    MultiplierSet {
        lambda: p.lambda.unwrap(),
        mu: p.mu.clone().unwrap(),
        theta: p.theta.clone().unwrap_or_default(),
    }
}

fn theorem_pipeline(p: &Problem) -> TheoremPipeline {
    let mut tp = TheoremPipeline::new(p.theorem.unwrap(), p.eta.clone().unwrap(), MultiplierMode::Verify(fixed_multipliers(p)));
    tp.beta_objective = p.beta_objective.clone();
    tp.beta_constraints = p.beta_constraints.clone();
    tp.beta_equalities = p.beta_equalities.clone();
    tp
}

fn kkt_all_levels(c: &mut Criterion, p: &Problem) {
    let m = fixed_multipliers(p);
    let sweep = kkt_sweep(&p.spec, p.point.unwrap(), &MultiplierMode::Verify(m.clone()), KKT_TOL).unwrap();
    let bad: Vec<f64> = sweep.iter().filter(|(_, r)| !(r.feasible && r.residual <= 1e-9)).map(|(a, _)| *a).collect();
    let worst = sweep.iter().map(|(_, r)| r.residual).fold(0.0, f64::max);
    c.check(
        "kkt_verify feasible on every level",
        bad.is_empty() && sweep.len() == p.spec.alpha_grid.len(),
        format!("mu = {:?}, {} levels, max residual {worst:e}, failing levels {bad:?}", m.mu, sweep.len()),
    );
}

fn exact_subdifferential(c: &mut Criterion, f: &PiecewiseFn, at: f64, want: (f64, f64)) {
    let got = clarke_subdiff_1d(f, at).unwrap().bounds().unwrap();
    c.check(
        &format!("exact subdifferential of {} at {at}", f.name()),
        got == want,
        format!("[{}, {}] vs expected [{}, {}]", got.0, got.1, want.0, want.1),
    );
}

fn runtime(c: &mut Criterion, name: &str) {
    let (code, report, elapsed) = run_example(name);
    c.check(
        &format!("run-example {name} passes within 5 s"),
        code == 0 && report["passed"] == Value::Bool(true) && elapsed <= RUNTIME_BUDGET,
        format!("exit {code}, {:.3} s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_1_example1() {
    let mut c = Criterion::new("criterion 1");
    let p = example("ex1");
    let grid = &p.spec.alpha_grid;
    c.check("alpha grid 0:1:0.05", grid.len() == 21 && grid[20] == 1.0, format!("{} levels", grid.len()));

    let worst = grid
        .iter()
        .map(|&a| {
            let got = p.spec.objective.weighted_coefficient(a, (0.25, 0.75)).unwrap();
            let closed = if a <= 0.75 { 3.0 - 2.0 * a / 3.0 } else { 4.0 - 2.0 * a };
            (got - closed).abs()
        })
        .fold(0.0, f64::max);
    c.check("c(alpha) matches the closed form", worst <= 1e-12, format!("max deviation {worst:e}"));

    kkt_all_levels(&mut c, &p);

    let eta = p.eta.clone().unwrap();
    let g = &p.spec.ineq[0];
    let opts = CertifyOptions::default();
    let full = PairSet::square(&linspace(0.0, 5.0, 101));
    let at_candidate = PairSet::at(0.0, &p.spec.feasible_grid());
    for (label, pairs) in [("101x101 pair grid over [0,5]", &full), ("pairs (x, 0) over the feasible grid", &at_candidate)] {
        let mut failing = Vec::new();
        let mut top: Option<(String, f64, f64, f64)> = None;
        let mut record = |name: String, f: &PiecewiseFn| {
            let v = certify_scalar(Property::Invex, f, &eta, pairs, &opts).unwrap();
            if !v.passed {
                let w = &v.witnesses[0];
                if top.as_ref().map_or(true, |t| w.excess > t.3) {
                    top = Some((name.clone(), w.x, w.u, w.excess));
                }
                failing.push(name);
            }
        };
        for &a in grid {
            let (fl, fr) = p.spec.objective.endpoint_fns(a).unwrap();
            record(format!("f^L@{a}"), &fl);
            record(format!("f^R@{a}"), &fr);
        }
        record("g".into(), g);
        let detail = match &top {
            None => format!("{} functions certified", 2 * grid.len() + 1),
            Some((name, x, u, e)) => format!(
                "{} of {} functions fail; strongest witness {name} at x = {x}, u = {u}, excess {e:.3}",
                failing.len(),
                2 * grid.len() + 1
            ),
        };
        c.check(&format!("invex certificates on the {label}"), failing.is_empty(), detail);
    }

    let nd = check_nondominated(&p.spec, 0.0, NondomMode::Strict, NondomReading::ForAllAlpha).unwrap();
    c.check(
        "strict nondominance of u = 0 on a 501-point grid",
        nd.passed && nd.checked_points == 501,
        format!("{} points, {} dominators", nd.checked_points, nd.dominator_count),
    );

    runtime(&mut c, "ex1");

    // only the full-square invexity clause fails
    assert_eq!(c.failed(), vec!["invex certificates on the 101x101 pair grid over [0,5]"]);
}

#[test]
fn criterion_2_example2() {
    let mut c = Criterion::new("criterion 2");
    let p = example("ex2");
    exact_subdifferential(&mut c, &p.spec.ineq[0], 0.0, (1.0, 1.0));
    exact_subdifferential(&mut c, &p.spec.ineq[1], 0.0, (0.0, 1.0));
    kkt_all_levels(&mut c, &p);

    let feasible = linspace(-1.0, 0.0, 201);
    let v = certify_vector(
        Property::VQuasiinvex,
        &p.spec.ineq,
        p.eta.as_ref().unwrap(),
        p.beta_constraints.as_ref().unwrap(),
        &PairSet::square(&feasible),
        &CertifyOptions::default(),
    )
    .unwrap();
    c.check(
        "v_quasiinvex of (g1, g2) on a 201-point grid over [-1, 0]",
        v.passed,
        format!("{} pairs, {} violations", v.checked_pairs, v.violations),
    );

    let r = run_theorem(&p.spec, 0.0, &theorem_pipeline(&p)).unwrap();
    c.check(
        "T63 concludes nondominance and the oracle agrees",
        r.conclusion.as_deref() == Some("f-nondominated") && r.oracle.passed && r.oracle.agrees,
        format!("{}, oracle passed {}", r.status, r.oracle.passed),
    );
    runtime(&mut c, "ex2");
    assert!(c.failed().is_empty());
}

#[test]
fn criterion_3_example3() {
    let mut c = Criterion::new("criterion 3");
    let p = example("ex3");
    exact_subdifferential(&mut c, &p.spec.ineq[0], 0.0, (-1.0, 0.0));
    kkt_all_levels(&mut c, &p);
    let r = run_theorem(&p.spec, 0.0, &theorem_pipeline(&p)).unwrap();
    c.check(
        "T65 conclusion matches the oracle",
        r.hypotheses_passed && r.oracle.passed && r.oracle.agrees,
        format!("{}, conclusion {:?}", r.status, r.conclusion),
    );
    runtime(&mut c, "ex3");
    assert!(c.failed().is_empty());
}

#[test]
fn criterion_4_counterexamples() {
    let mut c = Criterion::new("criterion 4");
    let opts = CertifyOptions::default();
    let mut false_pass = 0;
    let mut false_fail = 0;
    for case in scalar_cases() {
        let v = certify_scalar(case.property, &case.f, &case.eta, &case.pairs, &opts).unwrap();
        let ok = v.passed == case.expect_pass;
        false_pass += (!ok && v.passed) as usize;
        false_fail += (!ok && !v.passed) as usize;
        c.check(case.name, ok, format!("expected {}, got {}", case.expect_pass, v.label));
        if case.name.starts_with("3x - e^x") {
            let u = v.witnesses.first().map_or(f64::NAN, |w| w.u);
            c.check("3x - e^x witness near u = ln 3", (u - 3f64.ln()).abs() <= 1e-9, format!("u = {u}"));
        }
        if case.name.starts_with("x^2 - x^3") {
            let z = case.f.eval(2.0 / 3.0);
            c.check("z(2/3) = 0.148", (z - 0.148).abs() <= 1e-3, format!("z(2/3) = {z:.6}"));
        }
    }
    for case in vector_cases() {
        let v = certify_vector(case.property, &case.fns, &case.eta, &case.beta, &case.pairs, &opts).unwrap();
        let ok = v.passed == case.expect_pass;
        false_pass += (!ok && v.passed) as usize;
        false_fail += (!ok && !v.passed) as usize;
        c.check(case.name, ok, format!("expected {}, got {}", case.expect_pass, v.label));
    }
    c.check(
        "zero false passes and zero false fails",
        false_pass == 0 && false_fail == 0,
        format!("{false_pass} false passes, {false_fail} false fails"),
    );
    assert!(c.failed().is_empty());
}

/// Piecewise-linear interpolant through random values at random knots.
fn random_piecewise(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    let n = rng.gen_range(2..=6);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    xs.push(-1.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ys: Vec<f64> = xs.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
    move |x: f64| {
        let i = xs.partition_point(|&k| k <= x).clamp(1, xs.len() - 1);
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        ys[i - 1] + t * (ys[i] - ys[i - 1])
    }
}

#[test]
fn criterion_5_scalarization_sufficiency() {
    let mut c = Criterion::new("criterion 5");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let axis = linspace(-1.0, 1.0, 101);
    let instances = 200;
    let mut violations = 0;
    let mut minimizers = 0;
    for _ in 0..instances {
        let vmp = Vmp::new(
            vec![univariate(random_piecewise(&mut rng)), univariate(random_piecewise(&mut rng))],
            vec![axis.clone()],
        );
        let w1 = rng.gen_range(0.01..0.99);
        let front = pareto_front(&vmp, Dominance::Pareto);
        for x in weighted_argmin(&vmp, &[w1, 1.0 - w1]).unwrap() {
            minimizers += 1;
            violations += !front.contains(&x) as usize;
        }
    }
    c.check(
        "weighted_argmin points lie on the Pareto front",
        violations == 0,
        format!("{instances} instances, {minimizers} minimizers, {violations} violations"),
    );
    assert!(c.failed().is_empty());
}

fn random_interval(rng: &mut ChaCha8Rng) -> Polytope {
    let a = rng.gen_range(-3i32..=3) as f64;
    let b = rng.gen_range(-3i32..=3) as f64;
    Polytope::interval(a.min(b), a.max(b))
}

/// Distance from 0 to `[lo, hi]`.
fn gap(lo: f64, hi: f64) -> f64 {
    lo.max(-hi).max(0.0)
}

/// Coarse scan: μ_j ∈ [0, 3.5] on active constraints, θ ∈ [-3.5, 3.5].
fn box_scan_feasible(inst: &KktInstance, lambda: (f64, f64)) -> bool {
    const STEP: f64 = 0.08;
    let b = |p: &Polytope| p.bounds().unwrap();
    let (l, r) = (b(&inst.p_l), b(&inst.p_r));
    let base = (lambda.0 * l.0 + lambda.1 * r.0, lambda.0 * l.1 + lambda.1 * r.1);
    let mut axes: Vec<((f64, f64), Vec<f64>)> = Vec::new();
    let mu_axis: Vec<f64> = (0..=44).map(|i| i as f64 * STEP).collect();
    let theta_axis: Vec<f64> = (-44..=44).map(|i| i as f64 * STEP).collect();
    for t in inst.ineq.iter().filter(|t| t.value.abs() <= KKT_TOL) {
        axes.push((b(&t.poly), mu_axis.clone()));
    }
    for h in &inst.eq {
        axes.push((b(h), theta_axis.clone()));
    }
    fn scan(base: (f64, f64), axes: &[((f64, f64), Vec<f64>)]) -> f64 {
        match axes.split_first() {
            None => gap(base.0, base.1),
            Some((((lo, hi), values), rest)) => values
                .iter()
                .map(|&m| {
                    let (a, b) = (m * lo, m * hi);
                    scan((base.0 + a.min(b), base.1 + a.max(b)), rest)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }
    scan(base, &axes) < 0.125
}

#[test]
fn criterion_6_kkt_round_trip() {
    let mut c = Criterion::new("criterion 6");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let lambdas = [(0.25, 0.75), (0.5, 0.5), (0.75, 0.25)];
    let instances = 150;
    let (mut feasible, mut verify_failures, mut disagreements) = (0, 0, 0);
    for i in 0..instances {
        let lambda = lambdas[i % lambdas.len()];
        let mut inst = KktInstance::new(random_interval(&mut rng), random_interval(&mut rng));
        let constraints = rng.gen_range(0..=3);
        let equalities = if constraints < 3 { rng.gen_range(0..=1) } else { 0 };
        for _ in 0..constraints {
            let value = if rng.gen_bool(0.6) { 0.0 } else { -rng.gen_range(0.5..2.0) };
            inst = inst.ineq(random_interval(&mut rng), value);
        }
        for _ in 0..equalities {
            inst = inst.eq(random_interval(&mut rng));
        }
        let solved = kkt_solve(&inst, LambdaMode::Fixed(lambda.0, lambda.1), KKT_TOL).unwrap();
        if solved.feasible {
            feasible += 1;
            let m = solved.multipliers.as_ref().unwrap();
            let v = kkt_verify(&inst, m, KKT_TOL).unwrap();
            verify_failures += !(v.feasible && v.residual <= 1e-9) as usize;
        }
        disagreements += (solved.feasible != box_scan_feasible(&inst, lambda)) as usize;
    }
    c.check(
        "kkt_solve output passes kkt_verify",
        verify_failures == 0,
        format!("{feasible} feasible of {instances}, {verify_failures} verification failures"),
    );
    c.check(
        "kkt_solve matches the multiplier-box scan",
        disagreements == 0,
        format!("{disagreements} disagreements in {instances} instances"),
    );
    assert!(c.failed().is_empty());
}

#[test]
fn criterion_7_subdifferential_estimation() {
    let mut c = Criterion::new("criterion 7");
    let s = PiecewiseFn::new("s", example("ex1").spec.objective.shape.expr().clone(), (-1.0, 1.0)).unwrap();
    let abs = PiecewiseFn::parse("|x|", "abs(x)", (-1.0, 1.0)).unwrap();
    let g2 = example("ex2").spec.ineq[1].clone();
    for f in [&s, &abs, &g2] {
        let exact = clarke_subdiff_1d(f, 0.0).unwrap().bounds().unwrap();
        let est = estimate_limiting_gradients(|y: &[f64]| f.eval(y[0]), &[0.0], &default_radii(), 64, 7)
            .unwrap()
            .bounds()
            .unwrap();
        let err = (est.0 - exact.0).abs().max((est.1 - exact.1).abs());
        c.check(
            &format!("estimate at the kink of {}", f.name()),
            err <= 1e-4,
            format!("estimate [{:.6}, {:.6}] vs exact [{}, {}]", est.0, est.1, exact.0, exact.1),
        );
    }
    assert!(c.failed().is_empty());
}

#[test]
fn criterion_8_stationarity() {
    let mut c = Criterion::new("criterion 8");
    let opts = CertifyOptions::default();
    for case in scalar_cases().into_iter().filter(|k| k.property == Property::Invex) {
        if !certify_scalar(Property::Invex, &case.f, &case.eta, &case.pairs, &opts).unwrap().passed {
            continue;
        }
        let pts = invexkit::invexity::stationary_points(&case.f, &case.grid, 1e-9).unwrap();
        let bad = pts.iter().filter(|s| !s.is_global_min).count();
        c.check(
            &format!("stationary points of {} are grid minima", case.name),
            bad == 0,
            format!("{} stationary, {bad} above the grid minimum", pts.len()),
        );
    }
    for case in vector_cases().into_iter().filter(|k| k.property == Property::VInvex && k.expect_pass) {
        let weak = front_of(
            &Vmp::new(case.fns.iter().map(from_piecewise).collect(), vec![case.grid.clone()]).evaluate(),
            Dominance::Weak,
        );
        let mismatched = case
            .grid
            .iter()
            .filter(|&&u| {
                let subs: Vec<Polytope> = case.fns.iter().map(|f| clarke_subdiff_1d(f, u).unwrap()).collect();
                stationarity_weights(&subs).unwrap().is_some() != weak.contains(&[u])
            })
            .count();
        c.check(
            &format!("stationarity equivalence on {}", case.name),
            mismatched == 0,
            format!("{} grid points, {mismatched} mismatches", case.grid.len()),
        );
    }
    assert!(c.failed().is_empty());
}


#[test]
fn exit_codes_and_determinism() {
    let mut c = Criterion::new("exit codes");
    let ex1 = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/paper_ex1.fop");
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["run-example", "ex1"], 0),
        (vec!["certify", "--property", "quasiinvex", "--fn", "x^2 - x^3", "--eta", "x - u", "--grid", "-1:2:0.01"], 1),
        (vec!["check-kkt", "--problem", ex1, "--point", "0", "--mu", "0.4", "--alpha", "0:1:0.05"], 0),
        (vec!["check-kkt", "--problem", "ex1", "--point", "1", "--mu", "0.4"], 1),
        (vec!["nondominance", "--problem", "ex1", "--point", "1"], 1),
        (vec!["bridge", "--problem", "ex2", "--point", "0"], 0),
        (vec!["check-kkt", "--problem", "/nonexistent.fop", "--point", "0"], 2),
        (vec!["no-such-command"], 2),
    ];
    for (args, want) in cases {
        let mut full = args.clone();
        full.push("--no-timings");
        let a = invexkit(&full);
        let b = invexkit(&full);
        let code = a.status.code().unwrap();
        c.check(&format!("exit code of {}", args.join(" ")), code == want, format!("{code}, expected {want}"));
        if want != 2 {
            c.check(
                &format!("byte-identical reports for {}", args[0]),
                a.stdout == b.stdout && !a.stdout.is_empty(),
                format!("{} bytes", a.stdout.len()),
            );
        }
    }
    let w = invexkit(&["certify", "--property", "quasiinvex", "--fn", "x^2 - x^3", "--eta", "x - u", "--grid", "-1:2:0.01"]);
    let report: Value = serde_json::from_slice(&w.stdout).unwrap();
    let witnesses = report["witnesses"].as_array().map_or(0, Vec::len);
    c.check("failing certify carries a witness pair", witnesses > 0, format!("{witnesses} witnesses"));
    assert!(c.failed().is_empty());
}
