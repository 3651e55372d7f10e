//! Bundled example problems and the generalized-convexity counterexample catalog.

use crate::grid::{linspace, linspace_step};
use crate::invexity::{BetaVector, EtaMap, PairMap, PairSet, Property};
use crate::nonsmooth::PiecewiseFn;
use crate::problem::{parse_problem, Problem, ProblemError};

pub const EX1: &str = include_str!("../fixtures/paper_ex1.fop");
pub const EX2: &str = include_str!("../fixtures/paper_ex2.fop");
pub const EX3: &str = include_str!("../fixtures/paper_ex3.fop");

/// Problem-file text for `ex1`, `ex2` or `ex3`, also accepting the file names.
pub fn example_source(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".fop").trim_start_matches("paper_") {
        "ex1" => Some(EX1),
        "ex2" => Some(EX2),
        "ex3" => Some(EX3),
        _ => None,
    }
}

pub fn load_example(name: &str) -> Option<Result<Problem, ProblemError>> {
    example_source(name).map(parse_problem)
}

/// A scalar certification case with its expected verdict.
#[derive(Debug, Clone)]
pub struct ScalarCase {
    pub name: &'static str,
    pub f: PiecewiseFn,
    pub eta: EtaMap,
    pub property: Property,
    pub pairs: PairSet,
    pub grid: Vec<f64>,
    pub expect_pass: bool,
}

/// A vector certification case with its expected verdict.
#[derive(Debug, Clone)]
pub struct VectorCase {
    pub name: &'static str,
    pub fns: Vec<PiecewiseFn>,
    pub eta: EtaMap,
    pub beta: BetaVector,
    pub property: Property,
    pub pairs: PairSet,
    pub grid: Vec<f64>,
    pub expect_pass: bool,
}

fn pf(name: &str, text: &str, domain: (f64, f64)) -> PiecewiseFn {
    PiecewiseFn::parse(name, text, domain).expect("catalog functions are well formed")
}

fn eta(text: &str) -> EtaMap {
    PairMap::parse(text).expect("catalog maps are well formed")
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    linspace_step(lo, hi, step).expect("catalog grids are valid")
}

pub fn scalar_cases() -> Vec<ScalarCase> {
    let wide = grid(-2.0, 2.0, 0.1);
    let z_grid = grid(-1.0, 2.0, 0.01);
    let mut e_us = z_grid.clone();
    e_us.push(3f64.ln());
    let case = |name, f, eta, property, grid: &Vec<f64>, expect_pass| ScalarCase {
        name,
        f,
        eta,
        property,
        pairs: PairSet::square(grid),
        grid: grid.clone(),
        expect_pass,
    };
    vec![
        case(
            "x^3 + x invex",
            pf("f", "x^3 + x", (-2.0, 2.0)),
            eta("(x^3 + x - u^3 - u) / (3*u^2 + 1)"),
            Property::Invex,
            &wide,
            true,
        ),
        case("-x^3 invex", pf("f", "-x^3", (-2.0, 2.0)), eta("x - u"), Property::Invex, &wide, false),
        case("x^2 - x^3 quasiinvex", pf("z", "x^2 - x^3", (-1.0, 2.0)), eta("x - u"), Property::Quasiinvex, &z_grid, false),
        ScalarCase {
            name: "3x - e^x pseudoinvex",
            f: pf("z", "3*x - exp(x)", (-1.0, 2.0)),
            eta: eta("x - u"),
            property: Property::Pseudoinvex,
            pairs: PairSet::Product { xs: z_grid.clone(), us: e_us },
            grid: z_grid.clone(),
            expect_pass: false,
        },
        case("3x pseudoinvex", pf("f1", "3*x", (-1.0, 2.0)), eta("x - u"), Property::Pseudoinvex, &z_grid, true),
        case("-e^x pseudoinvex", pf("f2", "-exp(x)", (-1.0, 2.0)), eta("x - u"), Property::Pseudoinvex, &z_grid, true),
        case("x^2 quasiinvex", pf("f1", "x^2", (-1.0, 2.0)), eta("x - u"), Property::Quasiinvex, &z_grid, true),
        case("-x^3 quasiinvex", pf("f2", "-x^3", (-1.0, 2.0)), eta("x - u"), Property::Quasiinvex, &z_grid, true),
        case("|x| invex", pf("f", "abs(x)", (-2.0, 2.0)), eta("x - u"), Property::Invex, &wide, true),
    ]
}

/// Vector fixtures: the cubic pair, two piecewise pairs separating V-pseudo
/// from V-quasi invexity, and two convex pairs for the stationarity checks.
pub fn vector_cases() -> Vec<VectorCase> {
    let wide = grid(-2.0, 2.0, 0.1);
    let ones = || BetaVector::ones(2);
    let cubic = || vec![pf("f1", "-x^3", (-2.0, 2.0)), pf("f2", "-x", (-2.0, 2.0))];
    let scaled_beta = || BetaVector(vec![eta("x^2 + 1"), eta("u^2 + 1")]);
    let mut bg_xs = linspace(-1.0, 1.0, 201);
    bg_xs.push(-(1.0f64 / 3.0).sqrt());
    bg_xs.sort_by(f64::total_cmp);
    let bg1 = || {
        vec![
            pf("f1", "piecewise{ [-1,0]: -6*x^2; [0,1]: x }", (-1.0, 1.0)),
            pf("f2", "piecewise{ [-1,0]: 7*x^2 + 9*x^6; [0,1]: x }", (-1.0, 1.0)),
        ]
    };
    let bg2 = || {
        vec![
            pf("f1", "piecewise{ [-1,0]: x^2; [0,1]: x }", (-1.0, 1.0)),
            pf("f2", "piecewise{ [-1,0]: -3*x^2; [0,1]: x }", (-1.0, 1.0)),
        ]
    };
    let convex = grid(-2.0, 3.0, 0.05);
    let vc = |name, fns, eta, beta, property, pairs, grid: &Vec<f64>, expect_pass| VectorCase {
        name,
        fns,
        eta,
        beta,
        property,
        pairs,
        grid: grid.clone(),
        expect_pass,
    };
    vec![
        vc("(-x^3, -x) v_pseudoinvex", cubic(), eta("x - u"), ones(), Property::VPseudoinvex, PairSet::square(&wide), &wide, true),
        vc("(-x^3, -x) v_quasiinvex", cubic(), eta("x - u"), ones(), Property::VQuasiinvex, PairSet::square(&wide), &wide, true),
        vc("(-x^3, -x) v_invex", cubic(), eta("x - u"), ones(), Property::VInvex, PairSet::square(&wide), &wide, false),
        vc(
            "first piecewise pair v_pseudoinvex",
            bg1(),
            eta("1 - 2*x^2 + u"),
            scaled_beta(),
            Property::VPseudoinvex,
            PairSet::at(0.0, &bg_xs),
            &bg_xs,
            true,
        ),
        vc(
            "first piecewise pair v_quasiinvex",
            bg1(),
            eta("1 - 2*x^2 + u"),
            scaled_beta(),
            Property::VQuasiinvex,
            PairSet::at(0.0, &bg_xs),
            &bg_xs,
            false,
        ),
        vc(
            "second piecewise pair v_quasiinvex",
            bg2(),
            eta("x^2 - 1 + u"),
            scaled_beta(),
            Property::VQuasiinvex,
            PairSet::at(0.0, &bg_xs),
            &bg_xs,
            true,
        ),
        vc(
            "second piecewise pair v_pseudoinvex",
            bg2(),
            eta("x^2 - 1 + u"),
            scaled_beta(),
            Property::VPseudoinvex,
            PairSet::at(0.0, &bg_xs),
            &bg_xs,
            false,
        ),
        vc(
            "(x^2, (x-1)^2) v_invex",
            vec![pf("f1", "x^2", (-2.0, 3.0)), pf("f2", "(x - 1)^2", (-2.0, 3.0))],
            eta("x - u"),
            ones(),
            Property::VInvex,
            PairSet::square(&convex),
            &convex,
            true,
        ),
        vc(
            "(|x|, (x-1)^2) v_invex",
            vec![pf("f1", "abs(x)", (-2.0, 3.0)), pf("f2", "(x - 1)^2", (-2.0, 3.0))],
            eta("x - u"),
            ones(),
            Property::VInvex,
            PairSet::square(&convex),
            &convex,
            true,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invexity::{certify_scalar, certify_vector, CertifyOptions};

    #[test]
    fn examples_parse() {
        for name in ["ex1", "ex2", "paper_ex3.fop"] {
            let p = load_example(name).unwrap().unwrap();
            assert_eq!(p.point, Some(0.0));
            assert_eq!(p.spec.alpha_grid.len(), 21);
        }
        assert!(example_source("ex4").is_none());
    }

    #[test]
    fn catalog_matches_expectations() {
        let opts = CertifyOptions::default();
        for c in scalar_cases() {
            let v = certify_scalar(c.property, &c.f, &c.eta, &c.pairs, &opts).unwrap();
            assert_eq!(v.passed, c.expect_pass, "{}", c.name);
        }
        for c in vector_cases() {
            let v = certify_vector(c.property, &c.fns, &c.eta, &c.beta, &c.pairs, &opts).unwrap();
            assert_eq!(v.passed, c.expect_pass, "{}", c.name);
        }
    }
}
