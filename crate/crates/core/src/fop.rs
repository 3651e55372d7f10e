//! Fuzzy optimization problems, their per-level biobjective problems, the
//! nondominance oracle, and executable KKT sufficiency pipelines.

use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::fuzzy::{FuzzyError, FuzzyObjective};
use crate::grid::{default_alpha_grid, linspace};
use crate::invexity::{
    certify_scalar, certify_vector, BetaVector, CertifyOptions, EtaMap, InvexityError, PairSet, Property, Verdict,
};
use crate::kkt::{kkt_solve, kkt_verify, KktError, KktInstance, KktReport, LambdaMode, MultiplierSet, KKT_TOL};
use crate::nonsmooth::{clarke_subdiff_1d, NonsmoothError, PiecewiseFn};
use crate::pareto::{
    from_piecewise, front_of, weighted_argmin_table, Dominance, Table, Vmp, FEAS_TOL,
};

/// Oracle grid size used when a problem does not specify one.
pub const DEFAULT_X_POINTS: usize = 501;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FopError {
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Nonsmooth(#[from] NonsmoothError),
    #[error(transparent)]
    Kkt(#[from] KktError),
    #[error(transparent)]
    Invexity(#[from] InvexityError),
    #[error("u = {u} is infeasible ({reason})")]
    Infeasible { u: f64, reason: String },
    #[error("the α-grid is empty or leaves [0, 1]")]
    AlphaGrid,
    #[error("{theorem} needs {what}")]
    Missing { theorem: TheoremId, what: &'static str },
    #[error("{what}: expected {expected} components, got {got}")]
    Arity { what: &'static str, expected: usize, got: usize },
}

/// A fuzzy-valued objective with crisp constraints on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct FopSpec {
    pub objective: FuzzyObjective,
    pub ineq: Vec<PiecewiseFn>,
    pub eq: Vec<PiecewiseFn>,
    pub domain: (f64, f64),
    /// Oracle grid over the domain.
    pub x_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
}

impl FopSpec {
    pub fn new(objective: FuzzyObjective, domain: (f64, f64)) -> FopSpec {
        FopSpec {
            objective,
            ineq: Vec::new(),
            eq: Vec::new(),
            domain,
            x_grid: linspace(domain.0, domain.1, DEFAULT_X_POINTS),
            alpha_grid: default_alpha_grid(),
        }
    }

    pub fn is_feasible(&self, x: f64) -> bool {
        self.domain.0 <= x
            && x <= self.domain.1
            && self.ineq.iter().all(|g| g.eval(x) <= FEAS_TOL)
            && self.eq.iter().all(|h| h.eval(x).abs() <= FEAS_TOL)
    }

    pub fn feasible_grid(&self) -> Vec<f64> {
        self.x_grid.iter().copied().filter(|&x| self.is_feasible(x)).collect()
    }

    fn require_feasible(&self, u: f64) -> Result<(), FopError> {
        if !(self.domain.0 <= u && u <= self.domain.1) {
            return Err(FopError::Infeasible { u, reason: "outside the domain".into() });
        }
        for (j, g) in self.ineq.iter().enumerate() {
            let v = g.eval(u);
            if !(v <= FEAS_TOL) {
                return Err(FopError::Infeasible { u, reason: format!("{}(u) = {v} > 0", name_or(g, "g", j)) });
            }
        }
        for (k, h) in self.eq.iter().enumerate() {
            let v = h.eval(u);
            if !(v.abs() <= FEAS_TOL) {
                return Err(FopError::Infeasible { u, reason: format!("{}(u) = {v} ≠ 0", name_or(h, "h", k)) });
            }
        }
        Ok(())
    }

    fn checked_alphas(&self) -> Result<&[f64], FopError> {
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(FopError::AlphaGrid);
        }
        Ok(&self.alpha_grid)
    }

    /// Endpoint values `(f^L, f^R)` at every feasible grid point for level `a`,
    /// failing on the first endpoint inversion.
    pub fn endpoint_table(&self, a: f64) -> Result<Table, FopError> {
        let xs = self.feasible_grid();
        let values = exec::try_map(&xs, |&x| {
            let iv = self.objective.eval_endpoints(x, a)?;
            Ok::<_, FopError>(vec![iv.lo, iv.hi])
        })?;
        Ok(Table { points: xs.iter().map(|&x| vec![x]).collect(), values, grid_size: self.x_grid.len() })
    }
}

fn name_or(f: &PiecewiseFn, prefix: &str, i: usize) -> String {
    if f.name().is_empty() {
        format!("{prefix}{}", i + 1)
    } else {
        f.name().to_string()
    }
}

/// `VMP_α`: minimize `(f^L(·, α), f^R(·, α))` over the FOP's feasible set.
pub fn build_vmp(f: &FopSpec, a: f64) -> Result<Vmp, FopError> {
    f.endpoint_table(a)?;
    let (fl, fr) = f.objective.endpoint_fns(a)?;
    Ok(Vmp::new(vec![from_piecewise(&fl), from_piecewise(&fr)], vec![f.x_grid.clone()])
        .with_ineq(f.ineq.iter().map(from_piecewise).collect())
        .with_eq(f.eq.iter().map(from_piecewise).collect()))
}

/// Strength of the nondominance notion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NondomMode {
    Weak,
    Strict,
}

/// Placement of the α quantifier in the dominance condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NondomReading {
    /// A dominator must satisfy its branch at every level.
    ForAllAlpha,
    /// Domination at a single level suffices.
    SomeAlpha,
}

/// Which branch of the dominance condition a level satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelBranches {
    pub alpha: f64,
    /// `f^L(x) < f^L(u)` and `f^R(x) ≤ f^R(u)`.
    pub left_strict: bool,
    /// `f^L(x) ≤ f^L(u)` and `f^R(x) < f^R(u)`.
    pub right_strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dominator {
    pub x: f64,
    pub branch: String,
    pub profile: Vec<LevelBranches>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondomVerdict {
    pub mode: NondomMode,
    pub reading: NondomReading,
    pub passed: bool,
    pub label: String,
    pub dominators: Vec<Dominator>,
    pub dominator_count: usize,
    pub checked_points: usize,
    pub alpha_levels: usize,
}

struct LevelTables {
    alphas: Vec<f64>,
    tables: Vec<Table>,
    /// `(f^L(u), f^R(u))` per level.
    at_u: Vec<(f64, f64)>,
}

fn level_tables(f: &FopSpec, u: f64) -> Result<LevelTables, FopError> {
    f.require_feasible(u)?;
    let alphas = f.checked_alphas()?.to_vec();
    let tables = exec::try_map(&alphas, |&a| f.endpoint_table(a))?;
    let at_u = alphas
        .iter()
        .map(|&a| f.objective.eval_endpoints(u, a).map(|iv| (iv.lo, iv.hi)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LevelTables { alphas, tables, at_u })
}

fn branches(lt: &LevelTables, k: usize) -> Vec<LevelBranches> {
    lt.alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let (l, r) = (lt.tables[i].values[k][0], lt.tables[i].values[k][1]);
            let (lu, ru) = lt.at_u[i];
            LevelBranches { alpha, left_strict: l < lu && r <= ru, right_strict: l <= lu && r < ru }
        })
        .collect()
}

fn dominated_by(profile: &[LevelBranches], mode: NondomMode, reading: NondomReading) -> Option<&'static str> {
    match (reading, mode) {
        (NondomReading::ForAllAlpha, NondomMode::Weak) => {
            if profile.iter().all(|b| b.left_strict) {
                Some("f^L < and f^R <= at every level")
            } else if profile.iter().all(|b| b.right_strict) {
                Some("f^L <= and f^R < at every level")
            } else {
                None
            }
        }
        (NondomReading::ForAllAlpha, NondomMode::Strict) => profile
            .iter()
            .all(|b| b.left_strict || b.right_strict)
            .then_some("one branch at every level"),
        (NondomReading::SomeAlpha, NondomMode::Weak) => profile
            .iter()
            .any(|b| b.left_strict && b.right_strict)
            .then_some("f^L < and f^R < at some level"),
        (NondomReading::SomeAlpha, NondomMode::Strict) => {
            profile.iter().any(|b| b.left_strict || b.right_strict).then_some("some branch at some level")
        }
    }
}

const MAX_DOMINATORS: usize = 10;

fn nondom_from_tables(lt: &LevelTables, mode: NondomMode, reading: NondomReading) -> NondomVerdict {
    let n = lt.tables.first().map_or(0, Table::len);
    let hits: Vec<Option<Dominator>> = exec::map_range(n, |k| {
        let profile = branches(lt, k);
        let branch = dominated_by(&profile, mode, reading);
        branch.map(|b| Dominator { x: lt.tables[0].points[k][0], branch: b.to_string(), profile })
    });
    let all: Vec<Dominator> = hits.into_iter().flatten().collect();
    let count = all.len();
    let passed = count == 0;
    NondomVerdict {
        mode,
        reading,
        passed,
        label: if passed { "pass (sampled)".into() } else { "fail".into() },
        dominators: all.into_iter().take(MAX_DOMINATORS).collect(),
        dominator_count: count,
        checked_points: n,
        alpha_levels: lt.alphas.len(),
    }
}

/// Brute-force (weak) nondominance of `u` over the feasible x-grid and the α-grid.
pub fn check_nondominated(
    f: &FopSpec,
    u: f64,
    mode: NondomMode,
    reading: NondomReading,
) -> Result<NondomVerdict, FopError> {
    let lt = level_tables(f, u)?;
    Ok(nondom_from_tables(&lt, mode, reading))
}

/// Outcome of one bridge implication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeLine {
    pub name: String,
    pub reading: Option<NondomReading>,
    pub premise: bool,
    pub conclusion: bool,
    pub status: String,
}

impl BridgeLine {
    fn new(name: &str, reading: Option<NondomReading>, premise: bool, conclusion: bool) -> BridgeLine {
        let status = if !premise || conclusion { "consistent" } else { "violated" };
        BridgeLine { name: name.into(), reading, premise, conclusion, status: status.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStatus {
    pub alpha: f64,
    pub pareto: bool,
    pub weak_pareto: bool,
    /// Whether the cross and Hukuhara subtractions disagree at `u`.
    pub hukuhara_differs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarizationCase {
    pub case: String,
    pub checked: usize,
    pub violations: usize,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub u: f64,
    pub levels: Vec<LevelStatus>,
    pub nondominance: Vec<NondomVerdict>,
    pub propositions: Vec<BridgeLine>,
    pub scalarization: Vec<ScalarizationCase>,
    pub consistent: bool,
}

/// Weight pairs used to exercise the scalarization bridge.
pub fn bridge_weights() -> Vec<(f64, f64)> {
    (0..=10).map(|i| (i as f64 / 10.0, 1.0 - i as f64 / 10.0)).collect()
}

/// Evaluate the nondominance/Pareto bridge implications at `u`.
pub fn bridge_check(f: &FopSpec, u: f64) -> Result<BridgeReport, FopError> {
    let lt = level_tables(f, u)?;
    let levels: Vec<LevelStatus> = lt
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let (lu, ru) = lt.at_u[i];
            let t = &lt.tables[i];
            let v = [lu, ru];
            let hukuhara_differs = f.objective.endpoints_both(u, alpha).map(|e| e.readings_differ()).unwrap_or(true);
            LevelStatus {
                alpha,
                pareto: t.undominated(&v, Dominance::Pareto),
                weak_pareto: t.undominated(&v, Dominance::Weak),
                hukuhara_differs,
            }
        })
        .collect();
    let all_pareto = levels.iter().all(|l| l.pareto);
    let all_weak = levels.iter().all(|l| l.weak_pareto);
    let some_pareto = levels.iter().any(|l| l.pareto);
    let mut nondominance = Vec::new();
    let mut propositions = Vec::new();
    for reading in [NondomReading::ForAllAlpha, NondomReading::SomeAlpha] {
        let strict = nondom_from_tables(&lt, NondomMode::Strict, reading);
        let weak = nondom_from_tables(&lt, NondomMode::Weak, reading);
        propositions.push(BridgeLine::new(
            "nondominated => Pareto for every level",
            Some(reading),
            strict.passed,
            all_pareto,
        ));
        propositions.push(BridgeLine::new(
            "weakly nondominated => weakly Pareto for every level",
            Some(reading),
            weak.passed,
            all_weak,
        ));
        propositions.push(BridgeLine::new(
            "Pareto for every level => nondominated",
            Some(reading),
            all_pareto,
            strict.passed,
        ));
        propositions.push(BridgeLine::new(
            "Pareto for some level => weakly nondominated",
            Some(reading),
            some_pareto,
            weak.passed,
        ));
        nondominance.push(strict);
        nondominance.push(weak);
    }
    let scalarization = scalarization_cases(&lt)?;
    let consistent = propositions
        .iter()
        .filter(|p| p.reading == Some(NondomReading::ForAllAlpha))
        .all(|p| p.status == "consistent")
        && scalarization.iter().all(|c| c.violations == 0);
    Ok(BridgeReport { u, levels, nondominance, propositions, scalarization, consistent })
}

fn scalarization_cases(lt: &LevelTables) -> Result<Vec<ScalarizationCase>, FopError> {
    let weights = bridge_weights();
    let mut closed = (0, 0);
    let mut open = (0, 0);
    let mut unique = (0, 0);
    for t in &lt.tables {
        if t.is_empty() {
            continue;
        }
        let pareto = front_of(t, Dominance::Pareto);
        let weak = front_of(t, Dominance::Weak);
        for &(l1, l2) in &weights {
            let mins = weighted_argmin_table(t, &[l1, l2]).map_err(|_| FopError::AlphaGrid)?;
            for m in &mins {
                closed.0 += 1;
                if !weak.contains(m) {
                    closed.1 += 1;
                }
                if l1 > 0.0 && l2 > 0.0 {
                    open.0 += 1;
                    if !pareto.contains(m) {
                        open.1 += 1;
                    }
                }
            }
            if mins.len() == 1 {
                unique.0 += 1;
                if !pareto.contains(&mins[0]) {
                    unique.1 += 1;
                }
            }
        }
    }
    let case = |name: &str, (checked, violations): (usize, usize)| ScalarizationCase {
        case: name.into(),
        checked,
        violations,
        status: if violations == 0 { "consistent".into() } else { "violated".into() },
    };
    Ok(vec![
        case("weights in [0,1]^2 => weakly Pareto", closed),
        case("weights in (0,1)^2 => Pareto", open),
        case("unique minimizer => Pareto", unique),
    ])
}

/// The sufficiency theorems that can be run as pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    T37,
    T38,
    T62,
    T63,
    T64,
    T65,
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl TheoremId {
    pub fn parse(s: &str) -> Option<TheoremId> {
        Some(match s.to_ascii_uppercase().as_str() {
            "T37" => TheoremId::T37,
            "T38" => TheoremId::T38,
            "T62" => TheoremId::T62,
            "T63" => TheoremId::T63,
            "T64" => TheoremId::T64,
            "T65" => TheoremId::T65,
            _ => return None,
        })
    }

    /// Whether the theorem quantifies its hypotheses over every level.
    pub fn all_levels(self) -> bool {
        matches!(self, TheoremId::T38 | TheoremId::T63)
    }

    fn conclusion(self) -> &'static str {
        match self {
            TheoremId::T37 | TheoremId::T62 => "weakly f-nondominated",
            TheoremId::T38 | TheoremId::T63 => "f-nondominated",
            TheoremId::T64 | TheoremId::T65 => "weakly Pareto optimal for VMP_alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaScope {
    Single(f64),
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierMode {
    Verify(MultiplierSet),
    Solve(LambdaMode),
}

/// Inputs of a theorem pipeline.
#[derive(Debug, Clone)]
pub struct TheoremPipeline {
    pub theorem: TheoremId,
    pub eta: Option<EtaMap>,
    pub beta_objective: Option<BetaVector>,
    /// Indexed by inequality constraint; only active entries are used.
    pub beta_constraints: Option<BetaVector>,
    pub beta_equalities: Option<BetaVector>,
    pub multipliers: MultiplierMode,
    pub scope: AlphaScope,
    pub opts: CertifyOptions,
    pub tol: f64,
}

impl TheoremPipeline {
    pub fn new(theorem: TheoremId, eta: EtaMap, multipliers: MultiplierMode) -> TheoremPipeline {
        TheoremPipeline {
            theorem,
            eta: Some(eta),
            beta_objective: None,
            beta_constraints: None,
            beta_equalities: None,
            multipliers,
            scope: AlphaScope::All,
            opts: CertifyOptions::default(),
            tol: KKT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub hypothesis: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub alpha: f64,
    pub active: Vec<usize>,
    pub kkt: KktReport,
    pub certificates: Vec<Certificate>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub description: String,
    pub passed: bool,
    pub agrees: bool,
    pub nondominance: Option<NondomVerdict>,
    pub levels: Vec<LevelStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub u: f64,
    pub scope: AlphaScope,
    pub levels: Vec<LevelResult>,
    pub hypotheses_passed: bool,
    pub failed_at: Option<String>,
    pub status: String,
    pub conclusion: Option<String>,
    pub oracle: OracleCheck,
    /// Weak nondominance inferred from a Pareto level, for the theorems whose
    /// conclusion is per level.
    pub bridge: Option<BridgeLine>,
}

/// Build the KKT system at `(u, α)`.
pub fn kkt_instance(f: &FopSpec, u: f64, a: f64) -> Result<KktInstance, FopError> {
    let (fl, fr) = f.objective.endpoint_fns(a)?;
    let mut inst = KktInstance::new(clarke_subdiff_1d(&fl, u)?, clarke_subdiff_1d(&fr, u)?);
    for g in &f.ineq {
        inst = inst.ineq(clarke_subdiff_1d(g, u)?, g.eval(u));
    }
    for h in &f.eq {
        inst = inst.eq(clarke_subdiff_1d(h, u)?);
    }
    Ok(inst)
}

/// KKT check or search at each level of the FOP's α-grid.
pub fn kkt_sweep(f: &FopSpec, u: f64, mode: &MultiplierMode, tol: f64) -> Result<Vec<(f64, KktReport)>, FopError> {
    f.require_feasible(u)?;
    let alphas = f.checked_alphas()?.to_vec();
    exec::try_map(&alphas, |&a| {
        let inst = kkt_instance(f, u, a)?;
        let r = match mode {
            MultiplierMode::Verify(m) => kkt_verify(&inst, m, tol)?,
            MultiplierMode::Solve(lm) => kkt_solve(&inst, *lm, tol)?,
        };
        Ok::<_, FopError>((a, r))
    })
}

fn scalar_cert(
    label: String,
    property: Property,
    f: &PiecewiseFn,
    eta: &EtaMap,
    pairs: &PairSet,
    opts: &CertifyOptions,
) -> Result<Certificate, FopError> {
    Ok(Certificate { hypothesis: label, verdict: certify_scalar(property, f, eta, pairs, opts)? })
}

fn pick_beta(beta: &BetaVector, idx: &[usize], what: &'static str, total: usize) -> Result<BetaVector, FopError> {
    if beta.len() != total {
        return Err(FopError::Arity { what, expected: total, got: beta.len() });
    }
    Ok(BetaVector(idx.iter().map(|&j| beta.0[j].clone()).collect()))
}

fn run_level(f: &FopSpec, u: f64, a: f64, p: &TheoremPipeline, xs: &[f64]) -> Result<LevelResult, FopError> {
    let theorem = p.theorem;
    let eta = p.eta.as_ref().ok_or(FopError::Missing { theorem, what: "an eta map" })?;
    let inst = kkt_instance(f, u, a)?;
    let kkt = match &p.multipliers {
        MultiplierMode::Verify(m) => kkt_verify(&inst, m, p.tol)?,
        MultiplierMode::Solve(lm) => kkt_solve(&inst, *lm, p.tol)?,
    };
    let active: Vec<usize> = (0..f.ineq.len()).filter(|&j| f.ineq[j].eval(u).abs() <= p.tol).collect();
    let mut certificates = Vec::new();
    let pairs = PairSet::at(u, xs);
    if kkt.feasible {
        let m = kkt.multipliers.clone().expect("feasible reports carry multipliers");
        let (fl, fr) = f.objective.endpoint_fns(a)?;
        let opts = &p.opts;
        match theorem {
            TheoremId::T37 | TheoremId::T38 => {
                certificates.push(scalar_cert("f^L invex".into(), Property::Invex, &fl, eta, &pairs, opts)?);
                certificates.push(scalar_cert("f^R invex".into(), Property::Invex, &fr, eta, &pairs, opts)?);
                for &j in &active {
                    let g = &f.ineq[j];
                    certificates.push(scalar_cert(format!("{} invex", name_or(g, "g", j)), Property::Invex, g, eta, &pairs, opts)?);
                }
                for (k, h) in f.eq.iter().enumerate() {
                    certificates.push(scalar_cert(format!("{} invex", name_or(h, "h", k)), Property::Invex, h, eta, &pairs, opts)?);
                }
            }
            TheoremId::T62 | TheoremId::T63 => {
                let bo = p.beta_objective.as_ref().ok_or(FopError::Missing { theorem, what: "beta objective" })?;
                let bo = pick_beta(bo, &[0, 1], "beta objective", 2)?;
                let pair = [fl.scaled("l1*f^L", m.lambda.0, 0.0), fr.scaled("l2*f^R", m.lambda.1, 0.0)];
                certificates.push(Certificate {
                    hypothesis: "(l1 f^L, l2 f^R) V-pseudoinvex".into(),
                    verdict: certify_vector(Property::VPseudoinvex, &pair, eta, &bo, &pairs, opts)?,
                });
                if !active.is_empty() {
                    let bc = p.beta_constraints.as_ref().ok_or(FopError::Missing { theorem, what: "beta constraints" })?;
                    let bc = pick_beta(bc, &active, "beta constraints", f.ineq.len())?;
                    let gs: Vec<PiecewiseFn> =
                        active.iter().map(|&j| f.ineq[j].scaled(format!("mu{}*g", j + 1), m.mu[j], 0.0)).collect();
                    certificates.push(Certificate {
                        hypothesis: "(mu_j g_j) over J(u) V-quasiinvex".into(),
                        verdict: certify_vector(Property::VQuasiinvex, &gs, eta, &bc, &pairs, opts)?,
                    });
                }
                if !f.eq.is_empty() {
                    let all: Vec<usize> = (0..f.eq.len()).collect();
                    let be = match &p.beta_equalities {
                        Some(b) => pick_beta(b, &all, "beta equalities", f.eq.len())?,
                        None => BetaVector::ones(f.eq.len()),
                    };
                    let hs: Vec<PiecewiseFn> =
                        f.eq.iter().enumerate().map(|(k, h)| h.scaled(format!("theta{}*h", k + 1), m.theta[k], 0.0)).collect();
                    certificates.push(Certificate {
                        hypothesis: "(theta_k h_k) V-quasiinvex".into(),
                        verdict: certify_vector(Property::VQuasiinvex, &hs, eta, &be, &pairs, opts)?,
                    });
                }
            }
            TheoremId::T64 | TheoremId::T65 => {
                if theorem == TheoremId::T64 {
                    certificates.push(scalar_cert("f^L pseudoinvex".into(), Property::Pseudoinvex, &fl, eta, &pairs, opts)?);
                    certificates.push(scalar_cert("f^R pseudoinvex".into(), Property::Pseudoinvex, &fr, eta, &pairs, opts)?);
                } else {
                    let bo = p.beta_objective.as_ref().ok_or(FopError::Missing { theorem, what: "beta objective" })?;
                    let bo = pick_beta(bo, &[0, 1], "beta objective", 2)?;
                    certificates.push(Certificate {
                        hypothesis: "(f^L, f^R) V-invex".into(),
                        verdict: certify_vector(Property::VInvex, &[fl, fr], eta, &bo, &pairs, opts)?,
                    });
                }
                for &j in &active {
                    let g = &f.ineq[j];
                    certificates.push(scalar_cert(
                        format!("{} quasiinvex", name_or(g, "g", j)),
                        Property::Quasiinvex,
                        g,
                        eta,
                        &pairs,
                        opts,
                    )?);
                }
                for (k, h) in f.eq.iter().enumerate() {
                    certificates.push(scalar_cert(
                        format!("{} quasiinvex", name_or(h, "h", k)),
                        Property::Quasiinvex,
                        h,
                        eta,
                        &pairs,
                        opts,
                    )?);
                }
            }
        }
    }
    let passed = kkt.feasible && certificates.iter().all(|c| c.verdict.passed);
    Ok(LevelResult { alpha: a, active, kkt, certificates, passed })
}

/// Run a sufficiency theorem at `u`: KKT and invexity-type hypotheses at each
/// level in scope, then the conclusion cross-checked against the oracles.
pub fn run_theorem(f: &FopSpec, u: f64, p: &TheoremPipeline) -> Result<TheoremReport, FopError> {
    f.require_feasible(u)?;
    if p.eta.is_none() {
        return Err(FopError::Missing { theorem: p.theorem, what: "an eta map" });
    }
    let alphas: Vec<f64> = match p.scope {
        AlphaScope::Single(a) => {
            if !(0.0..=1.0).contains(&a) {
                return Err(FopError::AlphaGrid);
            }
            vec![a]
        }
        AlphaScope::All => f.checked_alphas()?.to_vec(),
    };
    let xs = f.feasible_grid();
    let computed = exec::try_map(&alphas, |&a| run_level(f, u, a, p, &xs))?;
    let mut levels = Vec::new();
    let mut failed_at = None;
    for lr in computed {
        let ok = lr.passed;
        if !ok {
            let what = if !lr.kkt.feasible {
                "KKT conditions".to_string()
            } else {
                lr.certificates
                    .iter()
                    .find(|c| !c.verdict.passed)
                    .map_or_else(String::new, |c| c.hypothesis.clone())
            };
            failed_at = Some(format!("alpha = {}: {what}", lr.alpha));
        }
        levels.push(lr);
        if !ok {
            break;
        }
    }
    let hypotheses_passed = failed_at.is_none();
    let (status, conclusion) = if hypotheses_passed {
        ("asserted".to_string(), Some(p.theorem.conclusion().to_string()))
    } else {
        ("inconclusive - hypothesis failed".to_string(), None)
    };

    let scoped = FopSpec { alpha_grid: alphas.clone(), ..f.clone() };
    let lt = level_tables(&scoped, u)?;
    let level_status: Vec<LevelStatus> = lt
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let v = [lt.at_u[i].0, lt.at_u[i].1];
            LevelStatus {
                alpha,
                pareto: lt.tables[i].undominated(&v, Dominance::Pareto),
                weak_pareto: lt.tables[i].undominated(&v, Dominance::Weak),
                hukuhara_differs: f.objective.endpoints_both(u, alpha).map(|e| e.readings_differ()).unwrap_or(true),
            }
        })
        .collect();
    let full = level_tables(f, u)?;
    let (oracle, bridge) = match p.theorem {
        TheoremId::T37 | TheoremId::T62 | TheoremId::T38 | TheoremId::T63 => {
            let mode = if p.theorem.all_levels() { NondomMode::Strict } else { NondomMode::Weak };
            let v = nondom_from_tables(&full, mode, NondomReading::ForAllAlpha);
            let passed = v.passed;
            (
                OracleCheck {
                    description: format!("{mode:?} nondominance over the x-grid and the full alpha-grid").to_lowercase(),
                    passed,
                    agrees: !hypotheses_passed || passed,
                    nondominance: Some(v),
                    levels: level_status,
                },
                None,
            )
        }
        TheoremId::T64 | TheoremId::T65 => {
            let passed = level_status.iter().all(|l| l.weak_pareto);
            let weak = nondom_from_tables(&full, NondomMode::Weak, NondomReading::ForAllAlpha);
            let some_pareto = level_status.iter().any(|l| l.pareto);
            let bridge = BridgeLine::new(
                "Pareto for some level in scope => weakly nondominated",
                Some(NondomReading::ForAllAlpha),
                some_pareto,
                weak.passed,
            );
            (
                OracleCheck {
                    description: "weak Pareto optimality of u in VMP_alpha for each level in scope".into(),
                    passed,
                    agrees: !hypotheses_passed || passed,
                    nondominance: Some(weak),
                    levels: level_status,
                },
                Some(bridge),
            )
        }
    };
    Ok(TheoremReport {
        theorem: p.theorem,
        u,
        scope: p.scope.clone(),
        levels,
        hypotheses_passed,
        failed_at,
        status,
        conclusion,
        oracle,
        bridge,
    })
}
