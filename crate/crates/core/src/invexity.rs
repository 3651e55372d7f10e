//! Sampled certification of invexity-type properties.
//!
//! Every check runs over a finite set of `(x, u)` pairs. A pass means no
//! violation was found on those pairs and is labeled `pass (sampled)`; a
//! fail carries concrete witnesses.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::expr::ExprFn;
use crate::nonsmooth::{clarke_subdiff_1d, NonsmoothError, PiecewiseFn};

/// Default slack for every comparison.
pub const EPS: f64 = 1e-9;
/// Default number of witnesses kept in a verdict.
pub const MAX_WITNESSES: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvexityError {
    #[error("η is not finite at (x = {x}, u = {u})")]
    EtaUndefined { x: f64, u: f64 },
    #[error("β_{index} = {value} is not positive at (x = {x}, u = {u})")]
    NonPositiveBeta { index: usize, x: f64, u: f64, value: f64 },
    #[error("{expected} β components required, got {got}")]
    BetaArity { expected: usize, got: usize },
    #[error("{0} needs at least one function")]
    NoFunctions(Property),
    #[error("{0} is a vector property; use certify_vector")]
    NotScalar(Property),
    #[error(transparent)]
    Nonsmooth(#[from] NonsmoothError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Invex,
    Pseudoinvex,
    Quasiinvex,
    VInvex,
    VPseudoinvex,
    VQuasiinvex,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Invex,
        Property::Pseudoinvex,
        Property::Quasiinvex,
        Property::VInvex,
        Property::VPseudoinvex,
        Property::VQuasiinvex,
    ];

    pub fn is_vector(self) -> bool {
        matches!(self, Property::VInvex | Property::VPseudoinvex | Property::VQuasiinvex)
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Invex => "invex",
            Property::Pseudoinvex => "pseudoinvex",
            Property::Quasiinvex => "quasiinvex",
            Property::VInvex => "v_invex",
            Property::VPseudoinvex => "v_pseudoinvex",
            Property::VQuasiinvex => "v_quasiinvex",
        }
    }

    pub fn parse(s: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == s || p.name().replace('_', "-") == s)
    }

    fn base(self) -> Property {
        match self {
            Property::VInvex => Property::Invex,
            Property::VPseudoinvex => Property::Pseudoinvex,
            Property::VQuasiinvex => Property::Quasiinvex,
            p => p,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the existential subgradient in pseudoinvexity-type clauses is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    /// Premise tested at `f°(u; η)`, the maximum over the subdifferential.
    Envelope,
    /// Some generator must make the implication hold: the premise is tested
    /// at the minimum of `ξ·η` instead.
    Existential,
}

type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A real-valued map of `(x, u)`.
#[derive(Clone)]
pub enum PairMap {
    Expr(ExprFn),
    Const(f64),
    Func(PairFn),
}

impl PairMap {
    pub fn parse(text: &str) -> Result<PairMap, crate::expr::ParseError> {
        ExprFn::parse_pair(text).map(PairMap::Expr)
    }

    pub fn func<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> PairMap {
        PairMap::Func(Arc::new(f))
    }

    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match self {
            PairMap::Expr(e) => e.eval(&[x, u]),
            PairMap::Const(c) => *c,
            PairMap::Func(f) => f(x, u),
        }
    }
}

impl fmt::Debug for PairMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairMap::Expr(e) => write!(f, "Expr({e})"),
            PairMap::Const(c) => write!(f, "Const({c})"),
            PairMap::Func(_) => write!(f, "Func(..)"),
        }
    }
}

impl fmt::Display for PairMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairMap::Expr(e) => write!(f, "{e}"),
            PairMap::Const(c) => write!(f, "{c}"),
            PairMap::Func(_) => write!(f, "<computed>"),
        }
    }
}

/// The kernel map η.
pub type EtaMap = PairMap;

/// Positive scalings `β_i(x; u)`, one per component.
#[derive(Debug, Clone)]
pub struct BetaVector(pub Vec<PairMap>);

impl BetaVector {
    pub fn ones(p: usize) -> BetaVector {
        BetaVector(vec![PairMap::Const(1.0); p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The `(x, u)` pairs a certification runs over.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSet {
    Product { xs: Vec<f64>, us: Vec<f64> },
    List(Vec<(f64, f64)>),
}

impl PairSet {
    pub fn square(grid: &[f64]) -> PairSet {
        PairSet::Product { xs: grid.to_vec(), us: grid.to_vec() }
    }

    /// All `(x, u)` with `u` fixed: the "at u on X" form of a hypothesis.
    pub fn at(u: f64, xs: &[f64]) -> PairSet {
        PairSet::Product { xs: xs.to_vec(), us: vec![u] }
    }

    pub fn len(&self) -> usize {
        match self {
            PairSet::Product { xs, us } => xs.len() * us.len(),
            PairSet::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pairs grouped by `u`, preserving first-appearance order.
    fn groups(&self) -> Vec<(f64, Vec<f64>)> {
        match self {
            PairSet::Product { xs, us } => us.iter().map(|&u| (u, xs.clone())).collect(),
            PairSet::List(pairs) => {
                let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
                for &(x, u) in pairs {
                    match out.iter_mut().find(|g| g.0 == u) {
                        Some(g) => g.1.push(x),
                        None => out.push((u, vec![x])),
                    }
                }
                out
            }
        }
    }
}

/// A violating pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub u: f64,
    /// Offending component for componentwise properties.
    pub component: Option<usize>,
    /// The subgradient selection (one per component) realizing the violation.
    pub xi: Vec<f64>,
    pub eta: f64,
    /// Premise value of implication-form properties.
    pub premise: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// Amount by which the required inequality fails, beyond `eps`.
    pub excess: f64,
}

impl Witness {
    fn order(a: &Witness, b: &Witness) -> std::cmp::Ordering {
        b.excess
            .total_cmp(&a.excess)
            .then(a.x.total_cmp(&b.x))
            .then(a.u.total_cmp(&b.u))
            .then(a.component.cmp(&b.component))
    }
}

/// Outcome of a certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub passed: bool,
    pub label: String,
    /// Strongest violations, largest excess first.
    pub witnesses: Vec<Witness>,
    pub violations: usize,
    pub checked_pairs: usize,
    pub vacuous_pairs: usize,
    pub eps: f64,
}

impl Verdict {
    pub fn empty(property: impl Into<String>, eps: f64) -> Verdict {
        Verdict {
            property: property.into(),
            passed: true,
            label: "pass (sampled)".into(),
            witnesses: Vec::new(),
            violations: 0,
            checked_pairs: 0,
            vacuous_pairs: 0,
            eps,
        }
    }

    /// Associative merge: counts add, witnesses are re-ranked and truncated.
    pub fn merge(mut self, other: Verdict, keep: usize) -> Verdict {
        self.witnesses.extend(other.witnesses);
        self.violations += other.violations;
        self.checked_pairs += other.checked_pairs;
        self.vacuous_pairs += other.vacuous_pairs;
        self.finish(keep)
    }

    fn finish(mut self, keep: usize) -> Verdict {
        self.witnesses.sort_by(Witness::order);
        self.witnesses.truncate(keep.max(1));
        self.passed = self.violations == 0;
        self.label = if self.passed { "pass (sampled)".into() } else { "fail".into() };
        self
    }
}

/// Knobs shared by all certifications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub eps: f64,
    pub reading: Reading,
    pub max_witnesses: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { eps: EPS, reading: Reading::Envelope, max_witnesses: MAX_WITNESSES }
    }
}

struct AtU {
    u: f64,
    fu: Vec<f64>,
    subdiffs: Vec<(f64, f64)>,
}

fn dd(sub: (f64, f64), d: f64) -> (f64, f64) {
    // (argmax ξ, max ξ·d)
    let (lo, hi) = sub;
    if lo * d >= hi * d {
        (lo, lo * d)
    } else {
        (hi, hi * d)
    }
}

fn dd_min(sub: (f64, f64), d: f64) -> (f64, f64) {
    let (lo, hi) = sub;
    if lo * d <= hi * d {
        (lo, lo * d)
    } else {
        (hi, hi * d)
    }
}

fn check_domain(f: &PiecewiseFn, x: f64) -> Result<(), InvexityError> {
    if f.contains(x) {
        Ok(())
    } else {
        let (lo, hi) = f.domain();
        Err(NonsmoothError::OutsideDomain { name: f.name().to_string(), x, lo, hi }.into())
    }
}

#[allow(clippy::too_many_arguments)]
fn check_pair(
    property: Property,
    fns: &[PiecewiseFn],
    at: &AtU,
    x: f64,
    eta: &EtaMap,
    beta: Option<&BetaVector>,
    opts: &CertifyOptions,
    acc: &mut Verdict,
) -> Result<(), InvexityError> {
    let u = at.u;
    let e = eta.eval(x, u);
    if !e.is_finite() {
        return Err(InvexityError::EtaUndefined { x, u });
    }
    let mut betas = Vec::with_capacity(fns.len());
    for i in 0..fns.len() {
        let b = beta.map_or(1.0, |bv| bv.0[i].eval(x, u));
        if !(b > 0.0) {
            return Err(InvexityError::NonPositiveBeta { index: i + 1, x, u, value: b });
        }
        betas.push(b);
    }
    let mut diffs = Vec::with_capacity(fns.len());
    for (f, fu) in fns.iter().zip(&at.fu) {
        check_domain(f, x)?;
        diffs.push(f.eval(x) - fu);
    }
    acc.checked_pairs += 1;
    let eps = opts.eps;
    let upper: Vec<(f64, f64)> = at.subdiffs.iter().map(|&s| dd(s, e)).collect();
    let lower: Vec<(f64, f64)> = at.subdiffs.iter().map(|&s| dd_min(s, e)).collect();
    let vacuous = e == 0.0 && at.subdiffs.iter().all(|&s| s == (0.0, 0.0));

    let mut push = |w: Witness| {
        acc.violations += 1;
        acc.witnesses.push(w);
    };

    match property.base() {
        Property::Invex => {
            for i in 0..fns.len() {
                let (xi, v) = upper[i];
                let rhs = betas[i] * v;
                let excess = rhs - diffs[i] - eps;
                if excess > 0.0 {
                    push(Witness {
                        x,
                        u,
                        component: Some(i),
                        xi: vec![xi],
                        eta: e,
                        premise: None,
                        lhs: diffs[i],
                        rhs,
                        excess,
                    });
                }
            }
        }
        Property::Pseudoinvex => {
            if vacuous {
                acc.vacuous_pairs += 1;
                return Ok(());
            }
            let sel = match opts.reading {
                Reading::Envelope => &upper,
                Reading::Existential => &lower,
            };
            let premise: f64 = sel.iter().map(|s| s.1).sum();
            let lhs: f64 = betas.iter().zip(&diffs).map(|(b, d)| b * d).sum();
            if premise >= -eps {
                let excess = -lhs - eps;
                if excess > 0.0 {
                    push(Witness {
                        x,
                        u,
                        component: None,
                        xi: sel.iter().map(|s| s.0).collect(),
                        eta: e,
                        premise: Some(premise),
                        lhs,
                        rhs: 0.0,
                        excess,
                    });
                }
            }
        }
        Property::Quasiinvex => {
            if vacuous {
                acc.vacuous_pairs += 1;
                return Ok(());
            }
            let premise: f64 = betas.iter().zip(&diffs).map(|(b, d)| b * d).sum();
            if premise <= eps {
                let lhs: f64 = upper.iter().map(|s| s.1).sum();
                let excess = lhs - eps;
                if excess > 0.0 {
                    push(Witness {
                        x,
                        u,
                        component: None,
                        xi: upper.iter().map(|s| s.0).collect(),
                        eta: e,
                        premise: Some(premise),
                        lhs,
                        rhs: 0.0,
                        excess,
                    });
                }
            }
        }
        _ => unreachable!("base() returns scalar properties"),
    }
    Ok(())
}

fn certify_impl(
    property: Property,
    fns: &[PiecewiseFn],
    eta: &EtaMap,
    beta: Option<&BetaVector>,
    pairs: &PairSet,
    opts: &CertifyOptions,
) -> Result<Verdict, InvexityError> {
    if fns.is_empty() {
        return Err(InvexityError::NoFunctions(property));
    }
    if let Some(b) = beta {
        if b.len() != fns.len() {
            return Err(InvexityError::BetaArity { expected: fns.len(), got: b.len() });
        }
    }
    let groups = pairs.groups();
    let partials = exec::try_map(&groups, |(u, xs)| {
        let mut fu = Vec::with_capacity(fns.len());
        let mut subdiffs = Vec::with_capacity(fns.len());
        for f in fns {
            let p = clarke_subdiff_1d(f, *u)?;
            fu.push(f.eval(*u));
            subdiffs.push(p.bounds().expect("1-D"));
        }
        let at = AtU { u: *u, fu, subdiffs };
        let mut acc = Verdict::empty(property.name(), opts.eps);
        for &x in xs {
            check_pair(property, fns, &at, x, eta, beta, opts, &mut acc)?;
        }
        Ok::<_, InvexityError>(acc.finish(opts.max_witnesses))
    })?;
    let mut out = Verdict::empty(property.name(), opts.eps);
    for p in partials {
        out = out.merge(p, opts.max_witnesses);
    }
    Ok(out.finish(opts.max_witnesses))
}

/// Invexity, pseudoinvexity or quasiinvexity of a single function.
pub fn certify_scalar(
    property: Property,
    f: &PiecewiseFn,
    eta: &EtaMap,
    pairs: &PairSet,
    opts: &CertifyOptions,
) -> Result<Verdict, InvexityError> {
    if property.is_vector() {
        return Err(InvexityError::NotScalar(property));
    }
    certify_impl(property, std::slice::from_ref(f), eta, None, pairs, opts)
}

/// V-invexity, V-pseudoinvexity or V-quasiinvexity of `F = (f_1, …, f_p)`.
///
/// Scalar properties are accepted too and are then checked componentwise
/// (invex) or on the sum (pseudo/quasi) with unit scalings.
pub fn certify_vector(
    property: Property,
    fns: &[PiecewiseFn],
    eta: &EtaMap,
    beta: &BetaVector,
    pairs: &PairSet,
    opts: &CertifyOptions,
) -> Result<Verdict, InvexityError> {
    certify_impl(property, fns, eta, Some(beta), pairs, opts)
}

/// Both readings of the existential subgradient, for reports.
pub fn certify_both_readings(
    property: Property,
    fns: &[PiecewiseFn],
    eta: &EtaMap,
    beta: &BetaVector,
    pairs: &PairSet,
    opts: &CertifyOptions,
) -> Result<(Verdict, Verdict), InvexityError> {
    let env = CertifyOptions { reading: Reading::Envelope, ..*opts };
    let ex = CertifyOptions { reading: Reading::Existential, ..*opts };
    Ok((
        certify_impl(property, fns, eta, Some(beta), pairs, &env)?,
        certify_impl(property, fns, eta, Some(beta), pairs, &ex)?,
    ))
}

/// Scalings that turn componentwise pseudoinvexity into V-invexity.
///
/// `β_i = (f_i(x) − f_i(u)) / f_i°(u; η)` when that ratio is finite and
/// positive, and 1 otherwise.
pub fn corollary_beta(fns: &[PiecewiseFn], eta: &EtaMap) -> BetaVector {
    BetaVector(
        fns.iter()
            .map(|f| {
                let f = f.clone();
                let eta = eta.clone();
                PairMap::func(move |x, u| {
                    let diff = f.eval(x) - f.eval(u);
                    if diff == 0.0 {
                        return 1.0;
                    }
                    let Ok(p) = clarke_subdiff_1d(&f, u) else { return 1.0 };
                    let e = eta.eval(x, u);
                    let Ok(fd) = p.directional_derivative(&[e]) else { return 1.0 };
                    let ratio = diff / fd;
                    if ratio.is_finite() && ratio > 0.0 {
                        ratio
                    } else {
                        1.0
                    }
                })
            })
            .collect(),
    )
}

/// A stationary grid point and how it compares with the grid minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub u: f64,
    pub value: f64,
    pub grid_min: f64,
    pub is_global_min: bool,
}

/// Grid points with `0 ∈ ∂_C f(u)` and whether each attains the grid minimum
/// within `tol`.
pub fn stationary_points(f: &PiecewiseFn, grid: &[f64], tol: f64) -> Result<Vec<StationaryPoint>, InvexityError> {
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let grid_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let flags = exec::try_map(grid, |&u| {
        Ok::<_, NonsmoothError>(clarke_subdiff_1d(f, u)?.contains_zero(crate::nonsmooth::ZERO_TOL).contains)
    })?;
    Ok(grid
        .iter()
        .zip(values)
        .zip(flags)
        .filter(|(_, stationary)| *stationary)
        .map(|((&u, value), _)| StationaryPoint { u, value, grid_min, is_global_min: value <= grid_min + tol })
        .collect())
}
