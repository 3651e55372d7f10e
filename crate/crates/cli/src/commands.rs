use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use invexkit::fixtures;
use invexkit::fop::{
    bridge_check, build_vmp, check_nondominated, kkt_sweep, run_theorem, AlphaScope, FopError, FopSpec, MultiplierMode,
    NondomMode, NondomReading, TheoremId, TheoremPipeline,
};
use invexkit::grid::{normalize_alpha_grid, parse_grid};
use invexkit::invexity::{
    certify_scalar, certify_vector, BetaVector, CertifyOptions, PairMap, PairSet, Property, Reading,
};
use invexkit::kkt::{KktError, LambdaMode, MultiplierSet};
use invexkit::nonsmooth::{clarke_subdiff_1d, PiecewiseFn};
use invexkit::pareto::{
    front_of, geoffrion_audit, geoffrion_bound, scalarization_audit, weighted_argmin_table, Dominance,
};
use invexkit::problem::{load_problem, parse_constant, parse_problem, Problem};

use crate::args::{Command, ExampleArg, ModeArg, MultiplierArgs, NondomReadingArg, ProblemArgs, ReadingArg};
use crate::report::Outcome;

/// A parsed problem and the text it came from.
struct Loaded {
    problem: Problem,
    source: String,
}

fn load(args: &ProblemArgs) -> Result<Loaded> {
    let path = Path::new(&args.problem);
    let (problem, source) = if path.exists() {
        let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        (load_problem(path).map_err(|e| anyhow!("{}:\n{e}", path.display()))?, source)
    } else if let Some(text) = fixtures::example_source(&args.problem) {
        (parse_problem(text).map_err(|e| anyhow!("{e}"))?, text.to_string())
    } else {
        bail!("no problem file `{}` and no bundled example of that name", args.problem);
    };
    let mut loaded = Loaded { problem, source };
    if let Some(a) = &args.alpha {
        let g = parse_grid(a).map_err(|e| anyhow!("--alpha: {e}"))?;
        loaded.problem.spec.alpha_grid =
            normalize_alpha_grid(g).filter(|g| !g.is_empty()).ok_or_else(|| anyhow!("--alpha must lie in [0, 1]"))?;
    } else if let Some(a) = loaded.problem.alpha {
        loaded.problem.spec.alpha_grid = vec![a];
    }
    if let Some(g) = &args.grid {
        loaded.problem.spec.x_grid = parse_grid(g).map_err(|e| anyhow!("--grid: {e}"))?;
    }
    Ok(loaded)
}

fn point(args: &ProblemArgs, p: &Problem) -> Result<f64> {
    match &args.point {
        Some(t) => parse_constant(t).map_err(|e| anyhow!("--point: {}", e.message)),
        None => p.point.ok_or_else(|| anyhow!("no --point given and the problem declares none")),
    }
}

fn numbers(flag: &str, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| parse_constant(t).map_err(|e| anyhow!("--{flag}: {}", e.message)))
        .collect()
}

fn lambda_pair(text: &str) -> Result<(f64, f64)> {
    match numbers("lambda", text)?.as_slice() {
        &[a, b] => Ok((a, b)),
        v => bail!("--lambda takes two values, got {}", v.len()),
    }
}

fn multipliers(args: &MultiplierArgs, p: &Problem) -> Result<MultiplierSet> {
    let lambda = match &args.lambda {
        Some(t) => lambda_pair(t)?,
        None => p.lambda.ok_or_else(|| anyhow!("no --lambda given and the problem declares none"))?,
    };
    let mu = match &args.mu {
        Some(t) => numbers("mu", t)?,
        None => p.mu.clone().unwrap_or_else(|| vec![0.0; p.spec.ineq.len()]),
    };
    let theta = match &args.theta {
        Some(t) => numbers("theta", t)?,
        None => p.theta.clone().unwrap_or_else(|| vec![0.0; p.spec.eq.len()]),
    };
    Ok(MultiplierSet { lambda, mu, theta })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Run one subcommand; returns the outcome and the input texts to digest.
pub fn run(command: &Command, tol: f64) -> Result<(Outcome, Vec<String>)> {
    match command {
        Command::CheckKkt { problem, multipliers: m } => {
            let l = load(problem)?;
            let u = point(problem, &l.problem)?;
            let m = multipliers(m, &l.problem)?;
            Ok((check_kkt(&l.problem.spec, u, m, tol)?, vec![l.source]))
        }
        Command::SolveKkt { problem, lambda } => {
            let l = load(problem)?;
            let u = point(problem, &l.problem)?;
            let mode = match lambda {
                Some(t) => {
                    let (a, b) = lambda_pair(t)?;
                    LambdaMode::Fixed(a, b)
                }
                None => LambdaMode::Normalized,
            };
            Ok((kkt_table(&l.problem.spec, u, &MultiplierMode::Solve(mode), tol, None)?, vec![l.source]))
        }
        Command::Certify { property, functions, eta, beta, grid, point, reading } => {
            Ok((certify(property, functions, eta, beta, grid, point.as_deref(), *reading)?, Vec::new()))
        }
        Command::Pareto { problem, lambda } => {
            let l = load(problem)?;
            let u = match &problem.point {
                Some(_) => Some(point(problem, &l.problem)?),
                None => l.problem.point,
            };
            let lambda = lambda.as_deref().map(lambda_pair).transpose()?;
            Ok((pareto(&l.problem.spec, u, lambda)?, vec![l.source]))
        }
        Command::Nondominance { problem, mode, reading } => {
            let l = load(problem)?;
            let u = point(problem, &l.problem)?;
            let mode = match mode {
                ModeArg::Weak => NondomMode::Weak,
                ModeArg::Strict => NondomMode::Strict,
            };
            let reading = match reading {
                NondomReadingArg::ForAll => NondomReading::ForAllAlpha,
                NondomReadingArg::Some => NondomReading::SomeAlpha,
            };
            let v = check_nondominated(&l.problem.spec, u, mode, reading)?;
            let witnesses = to_value(&v.dominators);
            let mut results = to_value(&v);
            results.as_object_mut().expect("object").remove("dominators");
            results["point"] = json!(u);
            Ok((Outcome { passed: v.passed, results, witnesses }, vec![l.source]))
        }
        Command::Bridge { problem } => {
            let l = load(problem)?;
            let u = point(problem, &l.problem)?;
            let r = bridge_check(&l.problem.spec, u)?;
            let violated: Vec<_> = r.propositions.iter().filter(|p| p.status == "violated").collect();
            let witnesses = to_value(&violated);
            Ok((Outcome { passed: r.consistent, results: to_value(&r), witnesses }, vec![l.source]))
        }
        Command::Theorem { problem, multipliers: m, theorem, eta, solve } => {
            let l = load(problem)?;
            let u = point(problem, &l.problem)?;
            let mut p = l.problem.clone();
            if let Some(e) = eta {
                p.eta = Some(PairMap::parse(e).map_err(|e| anyhow!("--eta: {e}"))?);
            }
            let id = match theorem {
                Some(t) => TheoremId::parse(t).ok_or_else(|| anyhow!("unknown theorem `{t}`"))?,
                None => p.theorem.ok_or_else(|| anyhow!("no --theorem given and the problem declares none"))?,
            };
            let mode = if *solve {
                match &m.lambda {
                    Some(t) => {
                        let (a, b) = lambda_pair(t)?;
                        MultiplierMode::Solve(LambdaMode::Fixed(a, b))
                    }
                    None => MultiplierMode::Solve(LambdaMode::Normalized),
                }
            } else {
                MultiplierMode::Verify(multipliers(m, &p)?)
            };
            let scope = match &p.spec.alpha_grid[..] {
                [a] => AlphaScope::Single(*a),
                _ => AlphaScope::All,
            };
            Ok((theorem_outcome(&p, id, u, mode, scope, tol)?, vec![l.source]))
        }
        Command::RunExample { name } => {
            let key = match name {
                ExampleArg::Ex1 => "ex1",
                ExampleArg::Ex2 => "ex2",
                ExampleArg::Ex3 => "ex3",
            };
            let source = fixtures::example_source(key).expect("bundled example");
            let p = parse_problem(source).map_err(|e| anyhow!("{e}"))?;
            Ok((run_example(key, &p, tol)?, vec![source.to_string()]))
        }
    }
}

fn kkt_table(f: &FopSpec, u: f64, mode: &MultiplierMode, tol: f64, lambda: Option<(f64, f64)>) -> Result<Outcome> {
    let rows = kkt_sweep(f, u, mode, tol)?;
    let mut out = Vec::new();
    let mut witnesses = Vec::new();
    for (alpha, r) in &rows {
        let mut row = json!({ "alpha": alpha });
        if let Some(l) = lambda {
            row["weighted_slope"] = json!(f.objective.weighted_coefficient(*alpha, l)?);
        }
        let obj = row.as_object_mut().expect("object");
        for (k, v) in to_value(r).as_object().expect("object") {
            obj.insert(k.clone(), v.clone());
        }
        if !r.feasible {
            witnesses.push(json!({ "alpha": alpha, "residual": r.residual }));
        }
        out.push(row);
    }
    let passed = rows.iter().all(|(_, r)| r.feasible);
    Ok(Outcome { passed, results: json!({ "point": u, "levels": out }), witnesses: Value::Array(witnesses) })
}

fn check_kkt(f: &FopSpec, u: f64, m: MultiplierSet, tol: f64) -> Result<Outcome> {
    let lambda = m.lambda;
    match kkt_table(f, u, &MultiplierMode::Verify(m), tol, Some(lambda)) {
        // slackness does not depend on alpha
        Err(e) => match e.downcast_ref::<FopError>() {
            Some(FopError::Kkt(KktError::Slackness { index, product })) => Ok(Outcome {
                passed: false,
                results: json!({ "point": u, "levels": [], "slackness": false }),
                witnesses: json!([{ "condition": "complementary slackness", "constraint": index, "product": product }]),
            }),
            _ => Err(e),
        },
        ok => ok,
    }
}

fn certify(
    property: &str,
    functions: &[String],
    eta: &str,
    beta: &[String],
    grid: &str,
    point: Option<&str>,
    reading: ReadingArg,
) -> Result<Outcome> {
    let property = Property::parse(property).ok_or_else(|| anyhow!("unknown property `{property}`"))?;
    let g = parse_grid(grid).map_err(|e| anyhow!("--grid: {e}"))?;
    let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fns = functions
        .iter()
        .enumerate()
        .map(|(i, t)| PiecewiseFn::parse(&format!("f{}", i + 1), t, (lo, hi)).map_err(|e| anyhow!("--fn `{t}`: {e}")))
        .collect::<Result<Vec<_>>>()?;
    let eta = PairMap::parse(eta).map_err(|e| anyhow!("--eta: {e}"))?;
    let pairs = match point {
        Some(t) => PairSet::at(parse_constant(t).map_err(|e| anyhow!("--point: {}", e.message))?, &g),
        None => PairSet::square(&g),
    };
    let opts = CertifyOptions {
        reading: match reading {
            ReadingArg::Envelope => Reading::Envelope,
            ReadingArg::Existential => Reading::Existential,
        },
        ..CertifyOptions::default()
    };
    let v = if property.is_vector() {
        let beta = if beta.is_empty() {
            BetaVector::ones(fns.len())
        } else {
            BetaVector(
                beta.iter()
                    .map(|b| PairMap::parse(b).map_err(|e| anyhow!("--beta: {e}")))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        certify_vector(property, &fns, &eta, &beta, &pairs, &opts)?
    } else {
        if fns.len() != 1 {
            bail!("{property} takes exactly one --fn");
        }
        certify_scalar(property, &fns[0], &eta, &pairs, &opts)?
    };
    let witnesses = to_value(&v.witnesses);
    let mut results = to_value(&v);
    results.as_object_mut().expect("object").remove("witnesses");
    results["pairs"] = json!(pairs.len());
    Ok(Outcome { passed: v.passed, results, witnesses })
}

fn pareto(f: &FopSpec, u: Option<f64>, lambda: Option<(f64, f64)>) -> Result<Outcome> {
    let mut levels = Vec::new();
    let mut witnesses = Vec::new();
    let mut passed = true;
    for &a in &f.alpha_grid {
        let t = f.endpoint_table(a)?;
        let front = front_of(&t, Dominance::Pareto);
        let weak = front_of(&t, Dominance::Weak);
        let xs = |fr: &invexkit::pareto::Front| fr.points.iter().map(|p| p[0]).collect::<Vec<_>>();
        let mut row = json!({
            "alpha": a,
            "feasible_points": t.len(),
            "front": xs(&front),
            "weak_front": xs(&weak),
        });
        if let Some(u) = u {
            let iv = f.objective.eval_endpoints(u, a)?;
            let v = [iv.lo, iv.hi];
            let pareto_ok = t.undominated(&v, Dominance::Pareto);
            row["point_pareto"] = json!(pareto_ok);
            row["point_weak_pareto"] = json!(t.undominated(&v, Dominance::Weak));
            if !pareto_ok {
                passed = false;
                if let Some(k) = t.dominator(&v, Dominance::Pareto) {
                    witnesses.push(json!({ "alpha": a, "dominator": t.points[k][0], "values": t.values[k] }));
                }
            }
        }
        let weights: Vec<Vec<f64>> = match lambda {
            Some((l1, l2)) => vec![vec![l1, l2]],
            None => (1..10).map(|k| vec![k as f64 / 10.0, 1.0 - k as f64 / 10.0]).collect(),
        };
        let audit = scalarization_audit(&build_vmp(f, a)?, &weights, false)?;
        passed &= audit.passed;
        row["scalarization"] = to_value(&audit);
        if let Some((l1, l2)) = lambda {
            let mins = weighted_argmin_table(&t, &[l1, l2])?;
            row["weighted_argmin"] = json!(mins.iter().map(|p| p[0]).collect::<Vec<_>>());
            if let Some(u) = u {
                let m = geoffrion_bound(&[l1, l2])?;
                row["tradeoff_audit"] = to_value(&geoffrion_audit(&build_vmp(f, a)?, &[u], m));
            }
        }
        levels.push(row);
    }
    Ok(Outcome { passed, results: json!({ "point": u, "levels": levels }), witnesses: Value::Array(witnesses) })
}

fn pipeline(p: &Problem, id: TheoremId, mode: MultiplierMode, scope: AlphaScope, tol: f64) -> Result<TheoremPipeline> {
    let eta = p.eta.clone().ok_or_else(|| anyhow!("{id} needs an eta map (`eta(x,u) = ...` or --eta)"))?;
    let mut tp = TheoremPipeline::new(id, eta, mode);
    tp.beta_objective = p.beta_objective.clone();
    tp.beta_constraints = p.beta_constraints.clone();
    tp.beta_equalities = p.beta_equalities.clone();
    tp.scope = scope;
    tp.tol = tol;
    Ok(tp)
}

fn theorem_outcome(p: &Problem, id: TheoremId, u: f64, mode: MultiplierMode, scope: AlphaScope, tol: f64) -> Result<Outcome> {
    let tp = pipeline(p, id, mode, scope, tol)?;
    let r = run_theorem(&p.spec, u, &tp)?;
    let witnesses: Vec<Value> = r
        .levels
        .iter()
        .flat_map(|l| {
            l.certificates.iter().filter(|c| !c.verdict.passed).map(move |c| {
                json!({ "alpha": l.alpha, "hypothesis": c.hypothesis, "witnesses": c.verdict.witnesses })
            })
        })
        .collect();
    let passed = r.hypotheses_passed && r.oracle.agrees;
    Ok(Outcome { passed, results: to_value(&r), witnesses: Value::Array(witnesses) })
}

fn run_example(key: &str, p: &Problem, tol: f64) -> Result<Outcome> {
    let f = &p.spec;
    let u = p.point.ok_or_else(|| anyhow!("example declares no point"))?;
    let m = multipliers(&MultiplierArgs::default(), p)?;
    let lambda = m.lambda;
    let kkt = check_kkt(f, u, m.clone(), tol)?;
    let subdiffs = f
        .ineq
        .iter()
        .chain(&f.eq)
        .map(|g| {
            let poly = clarke_subdiff_1d(g, u)?;
            let (lo, hi) = poly.bounds().expect("1-D");
            Ok(json!({ "name": g.name(), "value": g.eval(u), "lo": lo, "hi": hi }))
        })
        .collect::<Result<Vec<_>, invexkit::nonsmooth::NonsmoothError>>()?;
    let id = p.theorem.ok_or_else(|| anyhow!("example declares no theorem"))?;
    let theorem = theorem_outcome(p, id, u, MultiplierMode::Verify(m), AlphaScope::All, tol)?;
    let nondom = check_nondominated(f, u, NondomMode::Strict, NondomReading::ForAllAlpha)?;
    let bridge = bridge_check(f, u)?;
    let passed = kkt.passed && theorem.passed && nondom.passed;
    Ok(Outcome {
        passed,
        results: json!({
            "example": key,
            "point": u,
            "lambda": [lambda.0, lambda.1],
            "constraint_subdifferentials": subdiffs,
            "kkt": kkt.results,
            "theorem": theorem.results,
            "nondominance": to_value(&nondom),
            "bridge": to_value(&bridge),
        }),
        witnesses: json!({ "kkt": kkt.witnesses, "theorem": theorem.witnesses }),
    })
}
