//! Line-oriented problem files.
//!
//! ```text
//! fuzzy two = knots[(0,0), (1,0.75), (2,1), (3,0.75), (4,0)]
//! fn s(x) = ln(x^2 + abs(x) + 1) + 1
//! objective = two * s - 1
//! subject_to g <= 0
//! domain = [0, 5]
//! ```
//!
//! Every problem in a file is reported at once, each tagged with its line.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::expr::{ExprFn, ParseError};
use crate::fop::{FopSpec, TheoremId};
use crate::fuzzy::{FuzzyNumber, FuzzyObjective, Subtrahend};
use crate::grid::{linspace, normalize_alpha_grid, parse_grid, snap_to};
use crate::invexity::{BetaVector, EtaMap, PairMap};
use crate::nonsmooth::PiecewiseFn;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemError(pub Vec<Diagnostic>);

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(Diagnostic::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl std::error::Error for ProblemError {}

/// A resolved problem together with the command defaults it declares.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: FopSpec,
    pub eta: Option<EtaMap>,
    pub beta_objective: Option<BetaVector>,
    pub beta_constraints: Option<BetaVector>,
    pub beta_equalities: Option<BetaVector>,
    pub lambda: Option<(f64, f64)>,
    pub mu: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub point: Option<f64>,
    pub alpha: Option<f64>,
    pub theorem: Option<TheoremId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConstraintKind {
    Ineq,
    Eq,
}

struct FnDecl {
    line: usize,
    column: usize,
    expr: ExprFn,
}

#[derive(Default)]
struct Raw {
    fuzzy: HashMap<String, (usize, FuzzyNumber)>,
    fns: HashMap<String, FnDecl>,
    fn_order: Vec<String>,
    kinks: HashMap<String, (usize, Vec<f64>)>,
    objective: Option<(usize, String, String, Option<String>)>,
    constraints: Vec<(usize, usize, ConstraintKind, String)>,
    domain: Option<(f64, f64)>,
    x_grid: Option<Vec<f64>>,
    alpha_grid: Option<(usize, Vec<f64>)>,
    eta: Option<EtaMap>,
    beta: HashMap<String, BetaVector>,
    lambda: Option<(f64, f64)>,
    mu: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
    point: Option<f64>,
    alpha: Option<f64>,
    theorem: Option<TheoremId>,
    seen: HashMap<String, usize>,
}

struct Ctx {
    diags: Vec<Diagnostic>,
}

impl Ctx {
    fn err(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.diags.push(Diagnostic { line, column, message: message.into() });
    }

    fn expr_err(&mut self, line: usize, offset: usize, e: ParseError) {
        self.err(line, offset + e.column, e.message);
    }
}

/// Split on `sep` at bracket depth zero.
fn split_top(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out
}

/// Column (1-based, in chars) of byte offset `byte` within `line`.
fn col(line: &str, byte: usize) -> usize {
    line[..byte.min(line.len())].chars().count() + 1
}

fn trimmed_offset(s: &str) -> usize {
    s.len() - s.trim_start().len()
}

/// Evaluate a constant expression such as `2/5` or `ln(3)`.
pub fn parse_constant(text: &str) -> Result<f64, ParseError> {
    let e = ExprFn::parse_with_vars(text, &[])?;
    let v = e.eval(&[]);
    if v.is_nan() {
        return Err(ParseError { line: 1, column: 1, message: format!("`{}` is not a number", text.trim()) });
    }
    Ok(v)
}

/// Strip one pair of enclosing brackets.
fn inside<'a>(text: &'a str, open: char, close: char) -> Option<(usize, &'a str)> {
    let lead = trimmed_offset(text);
    let t = text.trim();
    if t.starts_with(open) && t.ends_with(close) && t.len() >= 2 {
        Some((lead + open.len_utf8(), &t[open.len_utf8()..t.len() - close.len_utf8()]))
    } else {
        None
    }
}

fn list_items(text: &str) -> Option<Vec<(usize, &str)>> {
    let (off, body) = inside(text, '[', ']').or_else(|| inside(text, '(', ')'))?;
    if body.trim().is_empty() {
        return Some(Vec::new());
    }
    Some(split_top(body, ',').into_iter().map(|(o, s)| (off + o, s)).collect())
}

fn number_list(ctx: &mut Ctx, ln: usize, line: &str, base: usize, text: &str) -> Option<Vec<f64>> {
    let Some(items) = list_items(text) else {
        ctx.err(ln, col(line, base), "expected a bracketed list");
        return None;
    };
    let mut out = Vec::new();
    for (o, item) in items {
        match parse_constant(item) {
            Ok(v) => out.push(v),
            Err(e) => {
                ctx.expr_err(ln, col(line, base + o) - 1, e);
                return None;
            }
        }
    }
    Some(out)
}

fn parse_knots(ctx: &mut Ctx, ln: usize, line: &str, base: usize, text: &str) -> Option<FuzzyNumber> {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("knots") else {
        ctx.err(ln, col(line, base + trimmed_offset(text)), "expected `knots[(x, mu), ...]`");
        return None;
    };
    let rest_off = base + trimmed_offset(text) + "knots".len();
    let items = list_items(rest)?;
    let mut knots = Vec::new();
    for (o, item) in items {
        let pair = number_list(ctx, ln, line, rest_off + o, item)?;
        if pair.len() != 2 {
            ctx.err(ln, col(line, rest_off + o), "each knot is a pair `(x, mu)`");
            return None;
        }
        knots.push((pair[0], pair[1]));
    }
    match FuzzyNumber::new(knots) {
        Ok(n) => Some(n),
        Err(e) => {
            ctx.err(ln, col(line, base), e.to_string());
            None
        }
    }
}

/// `NAME(args)` on the left of `=`.
fn head_call(lhs: &str) -> Option<(&str, Vec<&str>)> {
    let lhs = lhs.trim();
    let open = lhs.find('(')?;
    let close = lhs.strip_suffix(')')?;
    let name = lhs[..open].trim();
    let args = close[open + 1..].split(',').map(str::trim).collect();
    Some((name, args))
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn declare(ctx: &mut Ctx, raw: &mut Raw, key: String, ln: usize) -> bool {
    if let Some(prev) = raw.seen.get(&key) {
        ctx.err(ln, 1, format!("duplicate declaration of `{key}` (first on line {prev})"));
        return false;
    }
    raw.seen.insert(key, ln);
    true
}

fn pair_list(ctx: &mut Ctx, ln: usize, line: &str, base: usize, text: &str) -> Option<BetaVector> {
    let Some(items) = list_items(text) else {
        ctx.err(ln, col(line, base), "expected a bracketed list of expressions in (x, u)");
        return None;
    };
    let mut out = Vec::new();
    for (o, item) in items {
        match PairMap::parse(item) {
            Ok(m) => out.push(m),
            Err(e) => {
                ctx.expr_err(ln, col(line, base + o) - 1, e);
                return None;
            }
        }
    }
    Some(BetaVector(out))
}

fn parse_line(ctx: &mut Ctx, raw: &mut Raw, ln: usize, line: &str) {
    let code = line.split('#').next().unwrap_or("");
    if code.trim().is_empty() {
        return;
    }
    if let Some(rest) = code.trim_start().strip_prefix("subject_to") {
        let base = code.len() - rest.len();
        let (kind, op) = if rest.contains("<=") {
            (ConstraintKind::Ineq, "<=")
        } else if rest.contains("==") {
            (ConstraintKind::Eq, "==")
        } else {
            ctx.err(ln, col(line, base), "expected `subject_to NAME <= 0` or `subject_to NAME == 0`");
            return;
        };
        let (name, zero) = rest.split_once(op).expect("operator present");
        if zero.trim() != "0" {
            ctx.err(ln, col(line, base + name.len() + op.len()), "constraints compare against 0");
        }
        let name = name.trim();
        if !is_ident(name) {
            ctx.err(ln, col(line, base), format!("`{name}` is not a function name"));
            return;
        }
        raw.constraints.push((ln, col(line, base + trimmed_offset(rest)), kind, name.to_string()));
        return;
    }
    let Some(eq_at) = code.find('=') else {
        ctx.err(ln, 1, "expected a declaration of the form `KEY = VALUE`");
        return;
    };
    let (lhs, rhs) = (&code[..eq_at], &code[eq_at + 1..]);
    let rb = eq_at + 1;
    let words: Vec<&str> = lhs.split_whitespace().collect();
    match words.as_slice() {
        ["fuzzy", name] => {
            if !declare(ctx, raw, format!("fuzzy {name}"), ln) {
                return;
            }
            if let Some(n) = parse_knots(ctx, ln, line, rb, rhs) {
                raw.fuzzy.insert(name.to_string(), (ln, n));
            }
        }
        ["fn", ..] => {
            let head = lhs.trim_start().strip_prefix("fn").unwrap_or("");
            let Some((name, args)) = head_call(head) else {
                ctx.err(ln, 1, format!("expected `fn NAME(x) = ...`, found `{}`", head.trim()));
                return;
            };
            if args != ["x"] {
                ctx.err(ln, 1, format!("function `{name}` must take the single argument `x`"));
                return;
            }
            if !declare(ctx, raw, format!("fn {name}"), ln) {
                return;
            }
            match ExprFn::parse(rhs) {
                Ok(expr) => {
                    raw.fn_order.push(name.to_string());
                    raw.fns.insert(name.to_string(), FnDecl { line: ln, column: col(line, rb), expr });
                }
                Err(e) => ctx.expr_err(ln, col(line, rb) - 1, e),
            }
        }
        ["kinks", name] => {
            if declare(ctx, raw, format!("kinks {name}"), ln) {
                if let Some(v) = number_list(ctx, ln, line, rb, rhs) {
                    raw.kinks.insert(name.to_string(), (ln, v));
                }
            }
        }
        ["objective"] => {
            if !declare(ctx, raw, "objective".into(), ln) {
                return;
            }
            parse_objective(ctx, raw, ln, line, rb, rhs);
        }
        ["domain"] => {
            if declare(ctx, raw, "domain".into(), ln) {
                match number_list(ctx, ln, line, rb, rhs).as_deref() {
                    Some(&[lo, hi]) if lo.is_finite() && hi.is_finite() && lo < hi => raw.domain = Some((lo, hi)),
                    Some(_) => ctx.err(ln, col(line, rb), "domain must be `[lo, hi]` with finite lo < hi"),
                    None => {}
                }
            }
        }
        ["grid", which @ ("x" | "alpha")] => {
            if !declare(ctx, raw, format!("grid {which}"), ln) {
                return;
            }
            match parse_grid(rhs.trim()) {
                Ok(g) if *which == "x" => raw.x_grid = Some(g),
                Ok(g) => raw.alpha_grid = Some((ln, g)),
                Err(e) => ctx.err(ln, col(line, rb), e.to_string()),
            }
        }
        _ if head_call(lhs).is_some_and(|(n, a)| n == "eta" && a == ["x", "u"]) => {
            if declare(ctx, raw, "eta".into(), ln) {
                match EtaMap::parse(rhs) {
                    Ok(m) => raw.eta = Some(m),
                    Err(e) => ctx.expr_err(ln, col(line, rb) - 1, e),
                }
            }
        }
        ["beta", which @ ("objective" | "constraints" | "equalities")] => {
            if declare(ctx, raw, format!("beta {which}"), ln) {
                if let Some(b) = pair_list(ctx, ln, line, rb, rhs) {
                    raw.beta.insert(which.to_string(), b);
                }
            }
        }
        ["lambda"] => {
            if declare(ctx, raw, "lambda".into(), ln) {
                match number_list(ctx, ln, line, rb, rhs).as_deref() {
                    Some(&[a, b]) => raw.lambda = Some((a, b)),
                    Some(_) => ctx.err(ln, col(line, rb), "lambda has exactly two components"),
                    None => {}
                }
            }
        }
        [which @ ("mu" | "theta")] => {
            if declare(ctx, raw, which.to_string(), ln) {
                let v = number_list(ctx, ln, line, rb, rhs);
                if *which == "mu" {
                    raw.mu = v;
                } else {
                    raw.theta = v;
                }
            }
        }
        [which @ ("point" | "alpha")] => {
            if declare(ctx, raw, which.to_string(), ln) {
                match parse_constant(rhs) {
                    Ok(v) if *which == "point" => raw.point = Some(v),
                    Ok(v) if (0.0..=1.0).contains(&v) => raw.alpha = Some(v),
                    Ok(v) => ctx.err(ln, col(line, rb), format!("alpha = {v} is outside [0, 1]")),
                    Err(e) => ctx.expr_err(ln, col(line, rb) - 1, e),
                }
            }
        }
        ["theorem"] => {
            if declare(ctx, raw, "theorem".into(), ln) {
                match TheoremId::parse(rhs.trim()) {
                    Some(t) => raw.theorem = Some(t),
                    None => ctx.err(ln, col(line, rb), format!("unknown theorem `{}`", rhs.trim())),
                }
            }
        }
        _ => ctx.err(ln, 1, format!("unknown declaration `{}`", lhs.trim())),
    }
}

fn parse_objective(ctx: &mut Ctx, raw: &mut Raw, ln: usize, line: &str, base: usize, rhs: &str) {
    let (prod, sub) = match rhs.split_once('-') {
        Some((p, s)) => (p, Some(s.trim().to_string())),
        None => (rhs, None),
    };
    match prod.split_once('*') {
        Some((a, s)) if is_ident(a.trim()) && is_ident(s.trim()) => {
            raw.objective = Some((ln, a.trim().to_string(), s.trim().to_string(), sub));
        }
        _ => ctx.err(ln, col(line, base), "expected `objective = FUZZY * FN - FUZZY_OR_NUMBER`"),
    }
}

/// Parse problem-file text.
pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    let mut ctx = Ctx { diags: Vec::new() };
    let mut raw = Raw::default();
    for (i, line) in text.lines().enumerate() {
        parse_line(&mut ctx, &mut raw, i + 1, line);
    }
    let problem = resolve(&mut ctx, raw);
    if ctx.diags.is_empty() {
        Ok(problem.expect("no diagnostics implies a resolved problem"))
    } else {
        ctx.diags.sort_by_key(|d| (d.line, d.column));
        Err(ProblemError(ctx.diags))
    }
}

/// Read and parse a problem file.
pub fn load_problem(path: &Path) -> Result<Problem, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ProblemError(vec![Diagnostic { line: 0, column: 0, message: format!("{}: {e}", path.display()) }])
    })?;
    parse_problem(&text)
}

fn resolve(ctx: &mut Ctx, raw: Raw) -> Option<Problem> {
    let Some(domain) = raw.domain else {
        ctx.err(0, 0, "missing `domain = [lo, hi]`");
        return None;
    };
    for (name, (ln, _)) in &raw.kinks {
        if !raw.fns.contains_key(name) {
            ctx.err(*ln, 1, format!("kinks declared for undefined function `{name}`"));
        }
    }
    let mut fns: HashMap<String, PiecewiseFn> = HashMap::new();
    for name in &raw.fn_order {
        let d = &raw.fns[name];
        let kinks = raw.kinks.get(name).map(|(_, k)| k.as_slice()).unwrap_or(&[]);
        match PiecewiseFn::with_kinks(name.clone(), d.expr.clone(), domain, kinks) {
            Ok(f) => {
                fns.insert(name.clone(), f);
            }
            Err(e) => ctx.err(d.line, d.column, e.to_string()),
        }
    }
    let lookup_fn = |ctx: &mut Ctx, ln: usize, c: usize, name: &str| -> Option<PiecewiseFn> {
        let f = fns.get(name).cloned();
        if f.is_none() && !raw.fns.contains_key(name) {
            ctx.err(ln, c, format!("undefined function `{name}`"));
        }
        f
    };
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for (ln, c, kind, name) in &raw.constraints {
        if let Some(f) = lookup_fn(ctx, *ln, *c, name) {
            match kind {
                ConstraintKind::Ineq => ineq.push(f),
                ConstraintKind::Eq => eq.push(f),
            }
        }
    }
    let objective = match &raw.objective {
        None => {
            ctx.err(0, 0, "missing `objective = ...`");
            None
        }
        Some((ln, a, s, sub)) => {
            let coefficient = raw.fuzzy.get(a).map(|(_, n)| n.clone());
            if coefficient.is_none() {
                ctx.err(*ln, 1, format!("undefined fuzzy number `{a}`"));
            }
            let shape = lookup_fn(ctx, *ln, 1, s);
            let subtrahend = match sub.as_deref() {
                None => Some(Subtrahend::Crisp(0.0)),
                Some(b) if is_ident(b) && !matches!(b, "e" | "pi" | "inf") => match raw.fuzzy.get(b) {
                    Some((_, n)) => Some(Subtrahend::Fuzzy(n.clone())),
                    None => {
                        ctx.err(*ln, 1, format!("undefined fuzzy number `{b}`"));
                        None
                    }
                },
                Some(b) => match parse_constant(b) {
                    Ok(v) => Some(Subtrahend::Crisp(v)),
                    Err(e) => {
                        ctx.err(*ln, 1, e.message);
                        None
                    }
                },
            };
            match (coefficient, shape, subtrahend) {
                (Some(coefficient), Some(shape), Some(subtrahend)) => {
                    Some(FuzzyObjective { coefficient, shape, subtrahend })
                }
                _ => None,
            }
        }
    };
    let alpha_grid = match raw.alpha_grid {
        Some((ln, g)) => match normalize_alpha_grid(g) {
            Some(g) if !g.is_empty() => Some(g),
            _ => {
                ctx.err(ln, 1, "alpha grid must lie in [0, 1]");
                None
            }
        },
        None => None,
    };
    let objective = objective?;
    let mut spec = FopSpec::new(objective, domain);
    spec.ineq = ineq;
    spec.eq = eq;
    if let Some(mut g) = raw.x_grid {
        snap_to(&mut g, &[domain.0, domain.1]);
        g.retain(|x| (domain.0..=domain.1).contains(x));
        spec.x_grid = g;
    } else {
        spec.x_grid = linspace(domain.0, domain.1, crate::fop::DEFAULT_X_POINTS);
    }
    if let Some(g) = alpha_grid {
        spec.alpha_grid = g;
    }
    let mut beta = raw.beta;
    Some(Problem {
        spec,
        eta: raw.eta,
        beta_objective: beta.remove("objective"),
        beta_constraints: beta.remove("constraints"),
        beta_equalities: beta.remove("equalities"),
        lambda: raw.lambda,
        mu: raw.mu,
        theta: raw.theta,
        point: raw.point,
        alpha: raw.alpha,
        theorem: raw.theorem,
    })
}
