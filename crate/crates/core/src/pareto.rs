//! Dominance, brute-force Pareto fronts on grids, weighted-sum scalarization
//! and proper-efficiency audits.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::lp::{Lp, LpOutcome, Rel};
use crate::nonsmooth::{PiecewiseFn, Polytope};

/// Feasibility tolerance for constraints on grid points.
pub const FEAS_TOL: f64 = 1e-9;
/// Relative tolerance under which weighted sums count as tied.
pub const TIE_TOL: f64 = 1e-12;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParetoError {
    #[error("objective vectors have different lengths ({0} vs {1})")]
    Length(usize, usize),
    #[error("the feasible grid is empty")]
    EmptyFeasible,
    #[error("weights must be nonnegative with a positive sum")]
    BadWeights,
    #[error("{expected} weights required, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("a subdifferential has no generators")]
    EmptyGenerators,
    #[error("subdifferentials have mixed dimensions")]
    Dimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    /// `a ≤ b` componentwise with at least one strict inequality.
    Pareto,
    /// `a < b` in every component.
    Weak,
}

pub fn dominates(a: &[f64], b: &[f64], mode: Dominance) -> Result<bool, ParetoError> {
    if a.len() != b.len() {
        return Err(ParetoError::Length(a.len(), b.len()));
    }
    Ok(match mode {
        Dominance::Pareto => a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y),
        Dominance::Weak => a.iter().zip(b).all(|(x, y)| x < y),
    })
}

fn dom(a: &[f64], b: &[f64], mode: Dominance) -> bool {
    dominates(a, b, mode).unwrap_or(false)
}

/// A vector minimization problem restricted to a box grid.
#[derive(Clone)]
pub struct Vmp {
    pub objectives: Vec<ScalarFn>,
    pub ineq: Vec<ScalarFn>,
    pub eq: Vec<ScalarFn>,
    /// Per-axis grids; the search space is their Cartesian product.
    pub axes: Vec<Vec<f64>>,
}

impl fmt::Debug for Vmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vmp")
            .field("objectives", &self.objectives.len())
            .field("ineq", &self.ineq.len())
            .field("eq", &self.eq.len())
            .field("axes", &self.axes.iter().map(Vec::len).collect::<Vec<_>>())
            .finish()
    }
}

/// Lift a univariate closure to a [`ScalarFn`].
pub fn univariate<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> ScalarFn {
    Arc::new(move |x: &[f64]| f(x[0]))
}

/// Lift a piecewise function to a [`ScalarFn`].
pub fn from_piecewise(f: &PiecewiseFn) -> ScalarFn {
    let f = f.clone();
    Arc::new(move |x: &[f64]| f.eval(x[0]))
}

/// Feasible grid points with their objective vectors, in grid order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub grid_size: usize,
}

impl Table {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether `v` is undominated by every row.
    pub fn undominated(&self, v: &[f64], mode: Dominance) -> bool {
        !self.values.iter().any(|w| dom(w, v, mode))
    }

    /// First row dominating `v`, if any.
    pub fn dominator(&self, v: &[f64], mode: Dominance) -> Option<usize> {
        self.values.iter().position(|w| dom(w, v, mode))
    }
}

/// Points of a front together with the bookkeeping needed by reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Front {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub feasible_count: usize,
    pub empty_feasible: bool,
}

impl Front {
    pub fn contains(&self, point: &[f64]) -> bool {
        self.points.iter().any(|p| p.as_slice() == point)
    }
}

impl Vmp {
    pub fn new(objectives: Vec<ScalarFn>, axes: Vec<Vec<f64>>) -> Vmp {
        Vmp { objectives, ineq: Vec::new(), eq: Vec::new(), axes }
    }

    pub fn with_ineq(mut self, g: Vec<ScalarFn>) -> Vmp {
        self.ineq = g;
        self
    }

    pub fn with_eq(mut self, h: Vec<ScalarFn>) -> Vmp {
        self.eq = h;
        self
    }

    pub fn p(&self) -> usize {
        self.objectives.len()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.ineq.iter().all(|g| g(x) <= FEAS_TOL) && self.eq.iter().all(|h| h(x).abs() <= FEAS_TOL)
    }

    pub fn values_at(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|f| f(x)).collect()
    }

    pub fn evaluate(&self) -> Table {
        let pts = self.points();
        let grid_size = pts.len();
        let rows: Vec<Option<(Vec<f64>, Vec<f64>)>> = exec::map(&pts, |x| {
            self.is_feasible(x).then(|| (x.clone(), self.values_at(x)))
        });
        let (points, values) = rows.into_iter().flatten().unzip();
        Table { points, values, grid_size }
    }
}

/// Feasible grid points not dominated by any other feasible grid point.
pub fn pareto_front(p: &Vmp, mode: Dominance) -> Front {
    front_of(&p.evaluate(), mode)
}

pub fn front_of(t: &Table, mode: Dominance) -> Front {
    let keep = exec::map_range(t.len(), |i| t.undominated(&t.values[i], mode));
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, k) in keep.into_iter().enumerate() {
        if k {
            points.push(t.points[i].clone());
            values.push(t.values[i].clone());
        }
    }
    Front { points, values, feasible_count: t.len(), empty_feasible: t.is_empty() }
}

fn check_weights(w: &[f64], p: usize) -> Result<(), ParetoError> {
    if w.len() != p {
        return Err(ParetoError::WeightCount { expected: p, got: w.len() });
    }
    if w.iter().any(|&v| !(v >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) {
        return Err(ParetoError::BadWeights);
    }
    Ok(())
}

/// All grid minimizers of `Σ λ_i f_i`, ties included.
pub fn weighted_argmin(p: &Vmp, w: &[f64]) -> Result<Vec<Vec<f64>>, ParetoError> {
    weighted_argmin_table(&p.evaluate(), w)
}

pub fn weighted_argmin_table(t: &Table, w: &[f64]) -> Result<Vec<Vec<f64>>, ParetoError> {
    if t.is_empty() {
        return Err(ParetoError::EmptyFeasible);
    }
    check_weights(w, t.values[0].len())?;
    let sums: Vec<f64> = t.values.iter().map(|v| v.iter().zip(w).map(|(a, b)| a * b).sum()).collect();
    let best = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = best + TIE_TOL * best.abs().max(1.0);
    Ok(t.points.iter().zip(&sums).filter(|(_, &s)| s <= cut).map(|(p, _)| p.clone()).collect())
}

/// Weights `λ ≥ 0`, `Σ λ = 1` under which front point `i` minimizes the
/// weighted sum over the whole front, if any.
///
/// Every feasible point is dominated by some front point, so the front rows
/// are enough.
pub fn supporting_weights(front: &Front, i: usize) -> Option<Vec<f64>> {
    let vi = front.values.get(i)?;
    let p = vi.len();
    let scale = front.values.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut lp = Lp::feasibility(p);
    lp.push(vec![1.0; p], Rel::Eq, 1.0);
    for vj in &front.values {
        let d: Vec<f64> = vj.iter().zip(vi).map(|(a, b)| a - b).collect();
        lp.push(d, Rel::Ge, -TIE_TOL * scale);
    }
    lp.solve().solution().map(<[f64]>::to_vec)
}

/// Both directions of the weighted-sum characterization on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarizationAudit {
    pub weights: Vec<Vec<f64>>,
    /// Minimizers of some listed weighting outside the matching front.
    pub sufficiency_violations: Vec<Vec<f64>>,
    /// Pareto front points that no nonnegative weighting recovers.
    pub unrecovered: Vec<Vec<f64>>,
    /// Whether `unrecovered` counts against `passed`.
    pub declared_convex: bool,
    pub passed: bool,
}

/// Minimizers of every weighting in `weights` must be Pareto optimal
/// (weakly, for weightings with a zero entry). For a problem declared convex,
/// every Pareto front point must also be some weighting's minimizer.
pub fn scalarization_audit(
    p: &Vmp,
    weights: &[Vec<f64>],
    declared_convex: bool,
) -> Result<ScalarizationAudit, ParetoError> {
    let t = p.evaluate();
    let front = front_of(&t, Dominance::Pareto);
    let weak = front_of(&t, Dominance::Weak);
    let mut sufficiency_violations = Vec::new();
    for w in weights {
        let target = if w.iter().all(|&v| v > 0.0) { &front } else { &weak };
        for x in weighted_argmin_table(&t, w)? {
            if !target.contains(&x) && !sufficiency_violations.contains(&x) {
                sufficiency_violations.push(x);
            }
        }
    }
    let supported = exec::map_range(front.points.len(), |i| supporting_weights(&front, i).is_some());
    let unrecovered: Vec<Vec<f64>> =
        front.points.iter().zip(supported).filter(|(_, ok)| !ok).map(|(x, _)| x.clone()).collect();
    let passed = sufficiency_violations.is_empty() && (!declared_convex || unrecovered.is_empty());
    Ok(ScalarizationAudit {
        weights: weights.to_vec(),
        sufficiency_violations,
        unrecovered,
        declared_convex,
        passed,
    })
}

/// Bound on trade-offs guaranteed for minimizers of the weighted sum:
/// `(p − 1) · max_{i,j} λ_j / λ_i`.
pub fn geoffrion_bound(w: &[f64]) -> Result<f64, ParetoError> {
    if w.is_empty() || w.iter().any(|&v| !(v > 0.0)) {
        return Err(ParetoError::BadWeights);
    }
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((w.len() as f64 - 1.0) * max / min)
}

/// A trade-off exceeding the audited bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeOff {
    pub x: Vec<f64>,
    pub improved: usize,
    /// Best available worsened index, if any.
    pub worsened: Option<usize>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoffrionAudit {
    pub efficient: bool,
    pub passed: bool,
    pub label: String,
    pub bound: f64,
    /// Largest trade-off ratio the point actually needs on this grid.
    pub required: f64,
    pub witnesses: Vec<TradeOff>,
}

/// Check that no feasible grid point trades an improvement in one objective
/// for a deterioration of ratio above `m` in every other objective.
pub fn geoffrion_audit(p: &Vmp, u: &[f64], m: f64) -> GeoffrionAudit {
    let t = p.evaluate();
    let fu = p.values_at(u);
    let efficient = p.is_feasible(u) && t.undominated(&fu, Dominance::Pareto);
    if !efficient {
        return GeoffrionAudit {
            efficient,
            passed: false,
            label: "not efficient".into(),
            bound: m,
            required: f64::INFINITY,
            witnesses: Vec::new(),
        };
    }
    let per_point: Vec<Vec<TradeOff>> = exec::map_range(t.len(), |k| {
        let fx = &t.values[k];
        let mut out = Vec::new();
        for i in 0..fx.len() {
            if fx[i] >= fu[i] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in (0..fx.len()).filter(|&j| j != i && fx[j] > fu[j]) {
                let r = (fu[i] - fx[i]) / (fx[j] - fu[j]);
                if best.is_none_or(|(_, b)| r < b) {
                    best = Some((j, r));
                }
            }
            let (worsened, ratio) = match best {
                Some((j, r)) => (Some(j), r),
                None => (None, f64::INFINITY),
            };
            out.push(TradeOff { x: t.points[k].clone(), improved: i, worsened, ratio });
        }
        out
    });
    let all: Vec<TradeOff> = per_point.into_iter().flatten().collect();
    let required = all.iter().map(|w| w.ratio).fold(0.0, f64::max);
    let mut witnesses: Vec<TradeOff> = all.into_iter().filter(|w| w.ratio > m + 1e-9).collect();
    witnesses.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal)));
    witnesses.truncate(25);
    let passed = witnesses.is_empty();
    GeoffrionAudit {
        efficient,
        passed,
        label: if passed { "pass (sampled)".into() } else { "fail".into() },
        bound: m,
        required,
        witnesses,
    }
}

/// Weights `τ ≥ 0`, `Σ τ = 1` and subgradients `ξ_i ∈ P_i` with `Σ τ_i ξ_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityWeights {
    pub tau: Vec<f64>,
    /// `ξ_i`; for `τ_i = 0` the first generator is reported.
    pub xi: Vec<Vec<f64>>,
}

/// Solve the stationarity system as an LP over cone combinations of the
/// generators. Among solutions, the one putting most weight on the first
/// polytope is returned.
pub fn stationarity_weights(subdiffs: &[Polytope]) -> Result<Option<StationarityWeights>, ParetoError> {
    let dim = subdiffs.first().ok_or(ParetoError::EmptyGenerators)?.dim();
    if subdiffs.iter().any(|p| p.generators().is_empty()) {
        return Err(ParetoError::EmptyGenerators);
    }
    if subdiffs.iter().any(|p| p.dim() != dim) {
        return Err(ParetoError::Dimension);
    }
    let offsets: Vec<usize> = subdiffs
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.generators().len();
            Some(o)
        })
        .collect();
    let n: usize = subdiffs.iter().map(|p| p.generators().len()).sum();
    let mut objective = vec![0.0; n];
    for c in objective.iter_mut().take(subdiffs[0].generators().len()) {
        *c = -1.0;
    }
    let mut lp = Lp { objective, rows: Vec::new() };
    for c in 0..dim {
        let mut row = vec![0.0; n];
        for (p, &o) in subdiffs.iter().zip(&offsets) {
            for (k, g) in p.generators().iter().enumerate() {
                row[o + k] = g[c];
            }
        }
        lp.push(row, Rel::Eq, 0.0);
    }
    lp.push(vec![1.0; n], Rel::Eq, 1.0);
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        _ => return Ok(None),
    };
    let mut tau = Vec::new();
    let mut xi = Vec::new();
    for (p, &o) in subdiffs.iter().zip(&offsets) {
        let w = &x[o..o + p.generators().len()];
        let t: f64 = w.iter().sum();
        let sel = if t > 0.0 {
            (0..dim)
                .map(|c| p.generators().iter().zip(w).map(|(g, wk)| g[c] * wk).sum::<f64>() / t)
                .collect()
        } else {
            p.generators()[0].clone()
        };
        tau.push(t);
        xi.push(sel);
    }
    Ok(Some(StationarityWeights { tau, xi }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{linspace, linspace_step};

    fn vmp1(fs: Vec<ScalarFn>, grid: Vec<f64>) -> Vmp {
        Vmp::new(fs, vec![grid])
    }

    #[test]
    fn convex_fronts_are_fully_recovered() {
        let p = vmp1(
            vec![univariate(|x| x * x), univariate(|x| (x - 1.0) * (x - 1.0))],
            linspace_step(-1.0, 2.0, 0.05).unwrap(),
        );
        let w: Vec<Vec<f64>> = (1..10).map(|k| vec![k as f64 / 10.0, 1.0 - k as f64 / 10.0]).collect();
        let a = scalarization_audit(&p, &w, true).unwrap();
        assert!(a.passed && a.unrecovered.is_empty() && a.sufficiency_violations.is_empty());
    }

    #[test]
    fn concave_trade_off_leaves_interior_unrecovered() {
        let p = vmp1(vec![univariate(|x| x), univariate(|x| 1.0 - x * x)], linspace(0.0, 1.0, 11));
        let a = scalarization_audit(&p, &[vec![0.5, 0.5]], false).unwrap();
        assert!(a.passed);
        assert_eq!(a.unrecovered.len(), 9);
        assert!(!a.unrecovered.contains(&vec![0.0]) && !a.unrecovered.contains(&vec![1.0]));
        assert!(!scalarization_audit(&p, &[vec![0.5, 0.5]], true).unwrap().passed);
    }

    #[test]
    fn dominance_modes() {
        assert!(dominates(&[1.0, 2.0], &[1.0, 3.0], Dominance::Pareto).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 3.0], Dominance::Weak).unwrap());
        assert!(dominates(&[0.0, 0.0], &[1.0, 1.0], Dominance::Weak).unwrap());
        for m in [Dominance::Pareto, Dominance::Weak] {
            assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0], m).unwrap());
        }
        assert_eq!(dominates(&[1.0], &[1.0, 2.0], Dominance::Pareto), Err(ParetoError::Length(1, 2)));
    }

    #[test]
    fn fronts() {
        let grid = linspace_step(0.0, 1.0, 0.1).unwrap();
        let p = vmp1(vec![univariate(|x| x), univariate(|x| 1.0 - x)], grid);
        assert_eq!(pareto_front(&p, Dominance::Pareto).points.len(), 11);
        let p = vmp1(vec![univariate(|x| x * x), univariate(|x| x * x)], linspace(-1.0, 1.0, 21));
        assert_eq!(pareto_front(&p, Dominance::Pareto).points, vec![vec![0.0]]);
        let empty = vmp1(vec![univariate(|x| x)], linspace(0.0, 1.0, 3)).with_ineq(vec![univariate(|_| 1.0)]);
        let f = pareto_front(&empty, Dominance::Weak);
        assert!(f.empty_feasible && f.points.is_empty());
        assert_eq!(weighted_argmin(&empty, &[1.0]), Err(ParetoError::EmptyFeasible));
    }

    #[test]
    fn scalarization() {
        let grid = linspace_step(0.0, 1.0, 0.1).unwrap();
        let p = vmp1(vec![univariate(|x| x), univariate(|x| 1.0 - x)], grid);
        assert_eq!(weighted_argmin(&p, &[1.0, 1.0]).unwrap().len(), 11);
        let grid = linspace_step(0.0, 1.0, 0.25).unwrap();
        let p = vmp1(vec![univariate(|x| x), univariate(|x| (1.0 - x) * (1.0 - x))], grid);
        assert_eq!(weighted_argmin(&p, &[1.0, 1.0]).unwrap(), vec![vec![0.5]]);
        assert_eq!(weighted_argmin(&p, &[-1.0, 1.0]), Err(ParetoError::BadWeights));
    }

    #[test]
    fn geoffrion() {
        assert_eq!(geoffrion_bound(&[0.25, 0.75]).unwrap(), 3.0);
        let p = vmp1(vec![univariate(|x| x), univariate(|x| 1.0 - x)], linspace(0.0, 1.0, 11));
        let a = geoffrion_audit(&p, &[0.5], 1.0);
        assert!(a.efficient && a.passed, "{a:?}");
        let mut required = Vec::new();
        for n in [21, 201, 2001] {
            let p = vmp1(vec![univariate(|x| x * x * x), univariate(|x| 1.0 - x)], linspace(-1.0, 1.0, n));
            let a = geoffrion_audit(&p, &[0.0], 1e3);
            required.push(a.required);
        }
        assert!(required.windows(2).all(|w| w[1] > w[0]), "{required:?}");
        assert!(required[2] > 1e3);
        let dominated = geoffrion_audit(&p_dominated(), &[1.0], 1.0);
        assert!(!dominated.efficient && !dominated.passed);
    }

    fn p_dominated() -> Vmp {
        vmp1(vec![univariate(|x| x), univariate(|x| x)], linspace(0.0, 1.0, 3))
    }

    #[test]
    fn stationarity() {
        let w = stationarity_weights(&[Polytope::singleton(-1.0), Polytope::singleton(1.0)]).unwrap().unwrap();
        assert_eq!(w.tau, vec![0.5, 0.5]);
        let w = stationarity_weights(&[Polytope::interval(-1.0, 1.0), Polytope::singleton(-5.0)]).unwrap().unwrap();
        assert_eq!(w.tau, vec![1.0, 0.0]);
        assert!(w.xi[0][0].abs() < 1e-15);
        assert_eq!(stationarity_weights(&[Polytope::singleton(2.0), Polytope::singleton(3.0)]).unwrap(), None);
        assert_eq!(stationarity_weights(&[]), Err(ParetoError::EmptyGenerators));
    }
}
