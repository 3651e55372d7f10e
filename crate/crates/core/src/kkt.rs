//! KKT conditions over Clarke subdifferential polytopes.
//!
//! The condition checked is
//! `0 ∈ λ₁ P_L + λ₂ P_R + Σ_{j ∈ J(u)} μ_j P_{g_j} + Σ_k θ_k P_{h_k}`.
//! With multipliers fixed this is a membership test; searching for them is
//! made linear by folding each `μ_j · conv(P_{g_j})` into one nonnegative
//! combination of the generators of `P_{g_j}`.

use serde::Serialize;
use thiserror::Error;

use crate::lp::{Lp, LpOutcome, Rel};
use crate::nonsmooth::{PiecewiseFn, Polytope};

/// Default tolerance of KKT checks.
pub const KKT_TOL: f64 = 1e-9;
/// Lower bound on each λ in normalized search mode.
pub const LAMBDA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KktError {
    #[error("point is infeasible: g_{index}(u) = {value}")]
    Infeasible { index: usize, value: f64 },
    #[error("λ must be positive, got ({0}, {1})")]
    LambdaSign(f64, f64),
    #[error("μ_{index} = {value} is negative")]
    MuSign { index: usize, value: f64 },
    #[error("complementary slackness fails for constraint {index}: μ·g(u) = {product}")]
    Slackness { index: usize, product: f64 },
    #[error("expected {expected} {what} multipliers, got {got}")]
    Count { what: &'static str, expected: usize, got: usize },
    #[error("polytopes have mixed dimensions")]
    Dimension,
}

/// Indices `j` (0-based) with `|g_j(u)| ≤ tol`.
pub fn active_set(g: &[PiecewiseFn], u: f64, tol: f64) -> Result<Vec<usize>, KktError> {
    let mut active = Vec::new();
    for (j, gj) in g.iter().enumerate() {
        let v = gj.eval(u);
        if !(v <= tol) {
            return Err(KktError::Infeasible { index: j, value: v });
        }
        if v.abs() <= tol {
            active.push(j);
        }
    }
    Ok(active)
}

/// An inequality constraint at the point under test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IneqTerm {
    pub poly: Polytope,
    /// `g_j(u)`; a constraint counts as active when this is within tolerance of 0.
    pub value: f64,
}

/// The polytopes of one KKT system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktInstance {
    pub p_l: Polytope,
    pub p_r: Polytope,
    pub ineq: Vec<IneqTerm>,
    pub eq: Vec<Polytope>,
}

impl KktInstance {
    pub fn new(p_l: Polytope, p_r: Polytope) -> KktInstance {
        KktInstance { p_l, p_r, ineq: Vec::new(), eq: Vec::new() }
    }

    /// Add an inequality constraint with subdifferential `poly` and value `g(u)`.
    pub fn ineq(mut self, poly: Polytope, value: f64) -> KktInstance {
        self.ineq.push(IneqTerm { poly, value });
        self
    }

    pub fn eq(mut self, poly: Polytope) -> KktInstance {
        self.eq.push(poly);
        self
    }

    fn dim(&self) -> Result<usize, KktError> {
        let d = self.p_l.dim();
        let all = std::iter::once(&self.p_r).chain(self.ineq.iter().map(|t| &t.poly)).chain(&self.eq);
        if all.into_iter().any(|p| p.dim() != d) {
            return Err(KktError::Dimension);
        }
        Ok(d)
    }

    fn is_active(&self, j: usize, tol: f64) -> bool {
        self.ineq[j].value.abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierSet {
    pub lambda: (f64, f64),
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Outcome of a verification or search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub feasible: bool,
    pub multipliers: Option<MultiplierSet>,
    /// Distance from 0 to the weighted Minkowski sum (∞-norm in n-D).
    pub residual: f64,
    /// The Minkowski sum itself, 1-D only.
    pub sum: Option<(f64, f64)>,
    /// Subgradients selected from `P_L`, `P_R`, each `P_g`, each `P_h`, in that order.
    pub selection: Vec<Vec<f64>>,
    /// Set when a normalized search returned some `λ_i` on [`LAMBDA_FLOOR`].
    pub lambda_on_floor: bool,
}

impl KktReport {
    fn infeasible() -> KktReport {
        KktReport {
            feasible: false,
            multipliers: None,
            residual: f64::INFINITY,
            sum: None,
            selection: Vec::new(),
            lambda_on_floor: false,
        }
    }
}

fn check_multipliers(inst: &KktInstance, m: &MultiplierSet, tol: f64) -> Result<(), KktError> {
    if !(m.lambda.0 > 0.0 && m.lambda.1 > 0.0) {
        return Err(KktError::LambdaSign(m.lambda.0, m.lambda.1));
    }
    if m.mu.len() != inst.ineq.len() {
        return Err(KktError::Count { what: "μ", expected: inst.ineq.len(), got: m.mu.len() });
    }
    if m.theta.len() != inst.eq.len() {
        return Err(KktError::Count { what: "θ", expected: inst.eq.len(), got: m.theta.len() });
    }
    for (j, (&mu, term)) in m.mu.iter().zip(&inst.ineq).enumerate() {
        if mu < 0.0 {
            return Err(KktError::MuSign { index: j, value: mu });
        }
        let product = mu * term.value;
        if product.abs() > tol {
            return Err(KktError::Slackness { index: j, product });
        }
    }
    Ok(())
}

/// Check `0 ∈ λ₁P_L + λ₂P_R + Σ μ_j P_{g_j} + Σ θ_k P_{h_k}` for fixed multipliers.
pub fn kkt_verify(inst: &KktInstance, m: &MultiplierSet, tol: f64) -> Result<KktReport, KktError> {
    let dim = inst.dim()?;
    check_multipliers(inst, m, tol)?;
    let mut terms: Vec<(&Polytope, f64)> = vec![(&inst.p_l, m.lambda.0), (&inst.p_r, m.lambda.1)];
    terms.extend(inst.ineq.iter().map(|t| &t.poly).zip(m.mu.iter().copied()));
    terms.extend(inst.eq.iter().zip(m.theta.iter().copied()));
    let (residual, sum, selection) = if dim == 1 { verify_1d(&terms) } else { verify_nd(&terms, dim) };
    Ok(KktReport {
        feasible: residual <= tol,
        multipliers: Some(m.clone()),
        residual,
        sum,
        selection,
        lambda_on_floor: false,
    })
}

fn verify_1d(terms: &[(&Polytope, f64)]) -> (f64, Option<(f64, f64)>, Vec<Vec<f64>>) {
    // scaled intervals, remembering which original endpoint each end came from
    let scaled: Vec<(f64, f64, f64)> = terms
        .iter()
        .map(|(p, c)| {
            let (lo, hi) = p.bounds().expect("1-D");
            let (a, b) = (c * lo, c * hi);
            (a.min(b), a.max(b), *c)
        })
        .collect();
    let lo: f64 = scaled.iter().map(|s| s.0).sum();
    let hi: f64 = scaled.iter().map(|s| s.1).sum();
    let residual = lo.max(-hi).max(0.0);
    let mut picks: Vec<f64> = if hi < 0.0 {
        scaled.iter().map(|s| s.1).collect()
    } else {
        scaled.iter().map(|s| s.0).collect()
    };
    if lo < 0.0 && hi >= 0.0 {
        let mut deficit = -lo;
        for (p, s) in picks.iter_mut().zip(&scaled) {
            let inc = deficit.min(s.1 - s.0);
            *p += inc;
            deficit -= inc;
        }
    }
    let selection = picks
        .iter()
        .zip(terms)
        .zip(&scaled)
        .map(|((&v, (poly, _)), s)| {
            let (plo, phi) = poly.bounds().expect("1-D");
            let xi = if s.2 != 0.0 { (v / s.2).clamp(plo, phi) } else { plo };
            vec![xi]
        })
        .collect();
    (residual, Some((lo, hi)), selection)
}

fn verify_nd(terms: &[(&Polytope, f64)], dim: usize) -> (f64, Option<(f64, f64)>, Vec<Vec<f64>>) {
    let sizes: Vec<usize> = terms.iter().map(|(p, _)| p.generators().len()).collect();
    let n: usize = sizes.iter().sum::<usize>() + 1;
    let mut objective = vec![0.0; n];
    objective[n - 1] = 1.0;
    let mut lp = Lp { objective, rows: Vec::new() };
    let mut offset = 0;
    for &s in &sizes {
        let mut row = vec![0.0; n];
        for v in &mut row[offset..offset + s] {
            *v = 1.0;
        }
        lp.push(row, Rel::Eq, 1.0);
        offset += s;
    }
    for c in 0..dim {
        let mut row = vec![0.0; n];
        let mut offset = 0;
        for ((p, coef), &s) in terms.iter().zip(&sizes) {
            for (k, g) in p.generators().iter().enumerate() {
                row[offset + k] = coef * g[c];
            }
            offset += s;
        }
        let mut neg: Vec<f64> = row.iter().map(|v| -v).collect();
        row[n - 1] = -1.0;
        neg[n - 1] = -1.0;
        lp.push(row, Rel::Le, 0.0);
        lp.push(neg, Rel::Le, 0.0);
    }
    let LpOutcome::Optimal { x, value } = lp.solve() else {
        return (f64::INFINITY, None, Vec::new());
    };
    let mut offset = 0;
    let selection = terms
        .iter()
        .zip(&sizes)
        .map(|((p, _), &s)| {
            let w = &x[offset..offset + s];
            offset += s;
            (0..dim).map(|c| p.generators().iter().zip(w).map(|(g, wk)| g[c] * wk).sum()).collect()
        })
        .collect();
    (value.max(0.0), None, selection)
}

/// How λ is treated by [`kkt_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    Fixed(f64, f64),
    /// `λ₁ + λ₂ = 1` with `λ_i ≥` [`LAMBDA_FLOOR`].
    Normalized,
}

/// Search for multipliers making the KKT inclusion hold.
///
/// Inactive constraints get `μ_j = 0`. Equality multipliers are found by
/// trying each sign pattern in turn: a signed multiplier times the convex
/// hull of a polytope is a cone combination of the generators, or of their
/// negatives, but not of both at once.
pub fn kkt_solve(inst: &KktInstance, mode: LambdaMode, tol: f64) -> Result<KktReport, KktError> {
    let dim = inst.dim()?;
    if let LambdaMode::Fixed(a, b) = mode {
        if !(a > 0.0 && b > 0.0) {
            return Err(KktError::LambdaSign(a, b));
        }
    }
    let r = inst.eq.len();
    for pattern in 0..(1usize << r) {
        let signs: Vec<f64> = (0..r).map(|k| if pattern >> k & 1 == 0 { 1.0 } else { -1.0 }).collect();
        if let Some(m) = solve_pattern(inst, mode, dim, &signs, tol) {
            let mut report = kkt_verify(inst, &m, tol)?;
            report.lambda_on_floor = matches!(mode, LambdaMode::Normalized)
                && (m.lambda.0 <= LAMBDA_FLOOR * (1.0 + 1e-9) || m.lambda.1 <= LAMBDA_FLOOR * (1.0 + 1e-9));
            return Ok(report);
        }
    }
    Ok(KktReport::infeasible())
}

fn solve_pattern(inst: &KktInstance, mode: LambdaMode, dim: usize, signs: &[f64], tol: f64) -> Option<MultiplierSet> {
    // blocks: P_L, P_R, then active g_j, then h_k
    let active: Vec<usize> = (0..inst.ineq.len()).filter(|&j| inst.is_active(j, tol)).collect();
    let mut blocks: Vec<(&Polytope, f64)> = Vec::new();
    let (cl, cr) = match mode {
        LambdaMode::Fixed(a, b) => (a, b),
        LambdaMode::Normalized => (1.0, 1.0),
    };
    blocks.push((&inst.p_l, cl));
    blocks.push((&inst.p_r, cr));
    for &j in &active {
        blocks.push((&inst.ineq[j].poly, 1.0));
    }
    for (p, &s) in inst.eq.iter().zip(signs) {
        blocks.push((p, s));
    }
    let sizes: Vec<usize> = blocks.iter().map(|(p, _)| p.generators().len()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let n: usize = sizes.iter().sum();
    let mut lp = Lp::feasibility(n);
    let block_row = |b: usize| {
        let mut row = vec![0.0; n];
        for v in &mut row[offsets[b]..offsets[b] + sizes[b]] {
            *v = 1.0;
        }
        row
    };
    match mode {
        LambdaMode::Fixed(..) => {
            lp.push(block_row(0), Rel::Eq, 1.0);
            lp.push(block_row(1), Rel::Eq, 1.0);
        }
        LambdaMode::Normalized => {
            lp.push(block_row(0), Rel::Ge, LAMBDA_FLOOR);
            lp.push(block_row(1), Rel::Ge, LAMBDA_FLOOR);
            let both: Vec<f64> = block_row(0).iter().zip(block_row(1)).map(|(a, b)| a + b).collect();
            lp.push(both, Rel::Eq, 1.0);
        }
    }
    for c in 0..dim {
        let mut row = vec![0.0; n];
        for (b, (p, coef)) in blocks.iter().enumerate() {
            for (k, g) in p.generators().iter().enumerate() {
                row[offsets[b] + k] = coef * g[c];
            }
        }
        lp.push(row, Rel::Eq, 0.0);
    }
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        _ => return None,
    };
    let mass = |b: usize| x[offsets[b]..offsets[b] + sizes[b]].iter().sum::<f64>();
    let lambda = match mode {
        LambdaMode::Fixed(a, b) => (a, b),
        LambdaMode::Normalized => (mass(0), mass(1)),
    };
    let mut mu = vec![0.0; inst.ineq.len()];
    for (i, &j) in active.iter().enumerate() {
        mu[j] = mass(2 + i);
    }
    let theta = signs.iter().enumerate().map(|(k, s)| s * mass(2 + active.len() + k)).collect();
    Some(MultiplierSet { lambda, mu, theta })
}
