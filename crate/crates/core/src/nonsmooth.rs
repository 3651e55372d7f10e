//! Clarke subdifferentials and generalized directional derivatives.
//!
//! In one dimension the Clarke subdifferential of a piecewise-C¹ function is
//! the interval spanned by its one-sided derivatives, which [`ExprFn`]
//! evaluates exactly. Beyond that, [`estimate_limiting_gradients`] samples
//! finite-difference gradients near the point and returns their hull.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprFn, Side};
use crate::lp::{Lp, LpOutcome, Rel};

/// Default tolerance for [`Polytope::contains_zero`].
pub const ZERO_TOL: f64 = 1e-9;

const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonsmoothError {
    #[error("{name}: point {x} lies outside the domain [{lo}, {hi}]")]
    OutsideDomain { name: String, x: f64, lo: f64, hi: f64 },
    #[error("{name}: not defined at {x}")]
    Undefined { name: String, x: f64 },
    #[error("{name}: jump of {left} -> {right} at breakpoint {at}")]
    Discontinuous { name: String, at: f64, left: f64, right: f64 },
    #[error("{name}: empty domain [{lo}, {hi}]")]
    EmptyDomain { name: String, lo: f64, hi: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("a polytope needs at least one generator")]
    EmptyGenerators,
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("radii must be positive and decreasing")]
    BadRadii,
}

/// A univariate piecewise-C¹ function on a closed interval.
///
/// The breakpoints are the kinks declared by the expression (piece
/// boundaries, zeros of affine `abs`/`min`/`max` arguments) plus any kinks
/// supplied explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    name: String,
    expr: ExprFn,
    domain: (f64, f64),
    breakpoints: Vec<f64>,
}

impl PiecewiseFn {
    pub fn new(name: impl Into<String>, expr: ExprFn, domain: (f64, f64)) -> Result<Self, NonsmoothError> {
        Self::with_kinks(name, expr, domain, &[])
    }

    pub fn with_kinks(
        name: impl Into<String>,
        expr: ExprFn,
        domain: (f64, f64),
        kinks: &[f64],
    ) -> Result<Self, NonsmoothError> {
        let name = name.into();
        let (lo, hi) = domain;
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(NonsmoothError::EmptyDomain { name, lo, hi });
        }
        let mut breakpoints: Vec<f64> = expr
            .declared_kinks()
            .into_iter()
            .chain(kinks.iter().copied())
            .filter(|b| (lo..=hi).contains(b))
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let f = PiecewiseFn { name, expr, domain, breakpoints };
        f.validate()?;
        Ok(f)
    }

    /// Parse `text` as an expression in `x` and wrap it.
    pub fn parse(name: &str, text: &str, domain: (f64, f64)) -> Result<Self, String> {
        let expr = ExprFn::parse(text).map_err(|e| e.to_string())?;
        Self::new(name, expr, domain).map_err(|e| e.to_string())
    }

    fn validate(&self) -> Result<(), NonsmoothError> {
        let (lo, hi) = self.domain;
        for x in [lo, hi] {
            if !self.expr.eval(&[x]).is_finite() {
                return Err(NonsmoothError::Undefined { name: self.name.clone(), x });
            }
        }
        for &b in &self.breakpoints {
            let l = self.expr.eval_sided(b, &[], Side::Left).v;
            let r = self.expr.eval_sided(b, &[], Side::Right).v;
            if l.is_finite() && r.is_finite() && (l - r).abs() > CONTINUITY_TOL * (1.0 + l.abs().max(r.abs())) {
                return Err(NonsmoothError::Discontinuous { name: self.name.clone(), at: b, left: l, right: r });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expr(&self) -> &ExprFn {
        &self.expr
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Smooth pieces of the domain, split at the breakpoints.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        let mut cuts = vec![self.domain.0];
        cuts.extend(self.breakpoints.iter().copied().filter(|&b| b > self.domain.0 && b < self.domain.1));
        cuts.push(self.domain.1);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.expr.eval(&[x])
    }

    pub fn contains(&self, x: f64) -> bool {
        self.domain.0 <= x && x <= self.domain.1
    }

    /// `a·f + b` on the same domain and breakpoints.
    pub fn scaled(&self, name: impl Into<String>, a: f64, b: f64) -> PiecewiseFn {
        PiecewiseFn {
            name: name.into(),
            expr: self.expr.affine(a, b),
            domain: self.domain,
            breakpoints: self.breakpoints.clone(),
        }
    }

    /// Exact one-sided derivative; `None` when that side leaves every piece.
    pub fn one_sided(&self, x: f64, side: Side) -> Option<f64> {
        let d = self.expr.eval_sided(x, &[], side).d;
        d.is_finite().then_some(d)
    }
}

/// Convex hull of finitely many generators. One-dimensional polytopes are
/// stored canonically as `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polytope {
    dim: usize,
    generators: Vec<Vec<f64>>,
}

/// Result of a zero-membership test with its signed margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroTest {
    pub contains: bool,
    /// Depth of 0 inside the hull in 1-D (negative: distance outside). In n-D
    /// the negated ∞-norm distance from the hull to 0, capped at 0 from above.
    pub margin: f64,
}

impl Polytope {
    pub fn interval(lo: f64, hi: f64) -> Polytope {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let generators = if lo == hi { vec![vec![lo]] } else { vec![vec![lo], vec![hi]] };
        Polytope { dim: 1, generators }
    }

    pub fn singleton(v: f64) -> Polytope {
        Polytope::interval(v, v)
    }

    pub fn from_generators(generators: Vec<Vec<f64>>) -> Result<Polytope, NonsmoothError> {
        let dim = generators.first().ok_or(NonsmoothError::EmptyGenerators)?.len();
        if let Some(g) = generators.iter().find(|g| g.len() != dim) {
            return Err(NonsmoothError::Dimension { expected: dim, got: g.len() });
        }
        if dim == 1 {
            let lo = generators.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
            let hi = generators.iter().map(|g| g[0]).fold(f64::NEG_INFINITY, f64::max);
            return Ok(Polytope::interval(lo, hi));
        }
        Ok(Polytope { dim, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    /// `[min, max]` of a 1-D polytope.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        (self.dim == 1).then(|| (self.generators[0][0], self.generators[self.generators.len() - 1][0]))
    }

    pub fn scale(&self, c: f64) -> Polytope {
        let gens = self.generators.iter().map(|g| g.iter().map(|v| c * v).collect()).collect();
        Polytope::from_generators(gens).expect("nonempty")
    }

    /// `max_{ξ ∈ P} ξᵀd`, attained at a generator.
    pub fn directional_derivative(&self, d: &[f64]) -> Result<f64, NonsmoothError> {
        if d.len() != self.dim {
            return Err(NonsmoothError::Dimension { expected: self.dim, got: d.len() });
        }
        Ok(self
            .generators
            .iter()
            .map(|g| g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn contains_zero(&self, tol: f64) -> ZeroTest {
        if let Some((lo, hi)) = self.bounds() {
            let margin = (-lo).min(hi);
            return ZeroTest { contains: margin >= -tol, margin };
        }
        let dist = hull_distance_to_zero(&self.generators, self.dim);
        ZeroTest { contains: dist <= tol, margin: -dist }
    }
}

/// `min ‖Σ w_k g_k‖_∞` over convex weights `w`.
fn hull_distance_to_zero(gens: &[Vec<f64>], dim: usize) -> f64 {
    let k = gens.len();
    // variables: w_1..w_k, t
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut lp = Lp { objective, rows: Vec::new() };
    let mut sum = vec![1.0; k + 1];
    sum[k] = 0.0;
    lp.push(sum, Rel::Eq, 1.0);
    for c in 0..dim {
        let mut row: Vec<f64> = gens.iter().map(|g| g[c]).collect();
        row.push(-1.0);
        lp.push(row.clone(), Rel::Le, 0.0);
        let mut neg: Vec<f64> = row[..k].iter().map(|v| -v).collect();
        neg.push(-1.0);
        lp.push(neg, Rel::Le, 0.0);
    }
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => value.max(0.0),
        _ => f64::INFINITY,
    }
}

/// Clarke subdifferential of a univariate piecewise-C¹ function.
///
/// One-sided derivatives are taken with respect to the expression's natural
/// domain, so a kink sitting on the boundary of the declared box still
/// contributes both sides.
pub fn clarke_subdiff_1d(f: &PiecewiseFn, x: f64) -> Result<Polytope, NonsmoothError> {
    let (lo, hi) = f.domain();
    if !f.contains(x) {
        return Err(NonsmoothError::OutsideDomain { name: f.name().to_string(), x, lo, hi });
    }
    let sides: Vec<f64> = [Side::Left, Side::Right].iter().filter_map(|&s| f.one_sided(x, s)).collect();
    if sides.is_empty() {
        return Err(NonsmoothError::Undefined { name: f.name().to_string(), x });
    }
    let lo = sides.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sides.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // `+ 0.0` maps -0 to 0
    Ok(Polytope::interval(lo + 0.0, hi + 0.0))
}

/// `f°(u; d)` for a univariate function: `max(ξ_lo·d, ξ_hi·d)`.
pub fn directional_derivative(p: &Polytope, d: &[f64]) -> Result<f64, NonsmoothError> {
    p.directional_derivative(d)
}

/// Zero membership with the default tolerance semantics of [`Polytope::contains_zero`].
pub fn contains_zero(p: &Polytope, tol: f64) -> ZeroTest {
    p.contains_zero(tol)
}

/// One-sided derivative by finite differences with Richardson extrapolation.
///
/// Used for black-box functions that cannot be differentiated exactly.
pub fn one_sided_fd<F: Fn(f64) -> f64>(f: F, x: f64, side: Side, h0: f64) -> f64 {
    let s = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let fx = f(x);
    const LEVELS: usize = 4;
    let mut table = [0.0f64; LEVELS];
    for (i, slot) in table.iter_mut().enumerate() {
        let h = h0 / f64::powi(2.0, i as i32);
        *slot = s * (f(x + s * h) - fx) / h;
    }
    // first-order error: successive halving eliminates h, h², ...
    for level in 1..LEVELS {
        let factor = f64::powi(2.0, level as i32);
        for i in (level..LEVELS).rev() {
            table[i] = (factor * table[i] - table[i - 1]) / (factor - 1.0);
        }
    }
    table[LEVELS - 1]
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, y: &[f64], h: f64) -> Vec<f64> {
    let mut p = y.to_vec();
    (0..y.len())
        .map(|i| {
            p[i] = y[i] + h;
            let up = f(&p);
            p[i] = y[i] - h;
            let down = f(&p);
            p[i] = y[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Hull of sampled gradients at each radius of the schedule, largest first.
///
/// Samples lie in the cube of half-width `r` around `x`, at least `r/20` away
/// from `x` in every coordinate. The central-difference step is half that
/// distance, so it never straddles a kink located at `x` itself.
pub fn estimate_per_radius<F>(
    f: F,
    x: &[f64],
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<Polytope>, NonsmoothError>
where
    F: Fn(&[f64]) -> f64,
{
    if samples < 2 {
        return Err(NonsmoothError::TooFewSamples(samples));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(NonsmoothError::BadRadii);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    radii
        .iter()
        .map(|&r| {
            let gens: Vec<Vec<f64>> = (0..samples)
                .map(|_| {
                    let y: Vec<f64> = x
                        .iter()
                        .map(|&xi| {
                            let mag = rng.gen_range(0.05..=1.0) * r;
                            if rng.gen_bool(0.5) {
                                xi + mag
                            } else {
                                xi - mag
                            }
                        })
                        .collect();
                    let nearest = y.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(f64::INFINITY, f64::min);
                    fd_gradient(&f, &y, 0.5 * nearest)
                })
                .collect();
            Polytope::from_generators(gens)
        })
        .collect()
}

/// Hull of limiting-gradient estimates at the smallest radius of the schedule.
pub fn estimate_limiting_gradients<F>(
    f: F,
    x: &[f64],
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Polytope, NonsmoothError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut all = estimate_per_radius(f, x, radii, samples, seed)?;
    Ok(all.pop().expect("radii checked nonempty"))
}

/// The radius schedule `1e-2, 1e-3, …, 1e-6`.
pub fn default_radii() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf(text: &str, lo: f64, hi: f64) -> PiecewiseFn {
        PiecewiseFn::parse("f", text, (lo, hi)).unwrap()
    }

    #[test]
    fn clarke_examples() {
        let s = pf("ln(x^2 + abs(x) + 1) + 1", 0.0, 5.0);
        assert_eq!(clarke_subdiff_1d(&s, 0.0).unwrap().bounds(), Some((-1.0, 1.0)));
        let g = pf("x^2 - 5*x", 0.0, 5.0);
        assert_eq!(clarke_subdiff_1d(&g, 0.0).unwrap().bounds(), Some((-5.0, -5.0)));
        let g2 = pf("piecewise{ [-1,0]: -3*x^2; [0,1]: x }", -1.0, 1.0);
        assert_eq!(clarke_subdiff_1d(&g2, 0.0).unwrap().bounds(), Some((0.0, 1.0)));
        assert_eq!(clarke_subdiff_1d(&g2, 1.0).unwrap().bounds(), Some((1.0, 1.0)));
        assert!(matches!(clarke_subdiff_1d(&g2, 1.5), Err(NonsmoothError::OutsideDomain { .. })));
    }

    #[test]
    fn discontinuity_rejected() {
        let err = PiecewiseFn::parse("g", "piecewise{ [-1,0]: x - 1; [0,1]: -x }", (-1.0, 1.0)).unwrap_err();
        assert!(err.contains("jump"), "{err}");
    }

    #[test]
    fn directional_and_zero() {
        let p = Polytope::interval(-1.0, 1.0);
        assert_eq!(p.directional_derivative(&[1.0]).unwrap(), 1.0);
        assert_eq!(Polytope::singleton(-5.0).directional_derivative(&[-1.0]).unwrap(), 5.0);
        assert_eq!(Polytope::interval(0.0, 1.0).directional_derivative(&[-2.0]).unwrap(), 0.0);
        assert!(p.contains_zero(ZERO_TOL).contains);
        let t = Polytope::singleton(-5.0).contains_zero(ZERO_TOL);
        assert!(!t.contains && t.margin == -5.0);
        assert!(Polytope::interval(0.0, 1.0).contains_zero(0.0).contains);
        assert!(matches!(p.directional_derivative(&[1.0, 2.0]), Err(NonsmoothError::Dimension { .. })));
    }

    #[test]
    fn zero_in_planar_hull() {
        let tri = Polytope::from_generators(vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert!(tri.contains_zero(ZERO_TOL).contains);
        let off = Polytope::from_generators(vec![vec![1.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let t = off.contains_zero(ZERO_TOL);
        assert!(!t.contains && (t.margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimation_recovers_kinks() {
        let radii = default_radii();
        let s = pf("ln(x^2 + abs(x) + 1) + 1", 0.0, 5.0);
        let est = estimate_limiting_gradients(|y: &[f64]| s.eval(y[0]), &[0.0], &radii, 64, 7).unwrap();
        let (lo, hi) = est.bounds().unwrap();
        assert!((lo + 1.0).abs() < 1e-4 && (hi - 1.0).abs() < 1e-4, "{lo} {hi}");
        let fine: Vec<f64> = (3..=7).map(|k| 10f64.powi(-k)).collect();
        let sq = estimate_limiting_gradients(|y: &[f64]| y[0] * y[0], &[1.0], &fine, 64, 7).unwrap();
        let (lo, hi) = sq.bounds().unwrap();
        assert!((lo - 2.0).abs() < 1e-6 && (hi - 2.0).abs() < 1e-6);
        assert_eq!(estimate_limiting_gradients(|y: &[f64]| y[0], &[0.0], &radii, 1, 0), Err(NonsmoothError::TooFewSamples(1)));
        assert_eq!(estimate_limiting_gradients(|y: &[f64]| y[0], &[0.0], &[1e-3, 1e-2], 8, 0), Err(NonsmoothError::BadRadii));
    }

    #[test]
    fn richardson_one_sided() {
        let d = one_sided_fd(|x| (x * x + x.abs() + 1.0).ln(), 0.0, Side::Left, 1e-3);
        assert!((d + 1.0).abs() < 1e-8, "{d}");
        let d = one_sided_fd(f64::exp, 1.0, Side::Right, 1e-2);
        assert!((d - 1f64.exp()).abs() < 1e-8, "{d}");
    }

    #[test]
    fn pieces_split_at_breakpoints() {
        let f = pf("abs(x - 1) + piecewise{ [-5,2]: 0; [2,5]: x - 2 }", -5.0, 5.0);
        assert_eq!(f.breakpoints(), &[1.0, 2.0]);
        assert_eq!(f.pieces(), vec![(-5.0, 1.0), (1.0, 2.0), (2.0, 5.0)]);
    }
}
