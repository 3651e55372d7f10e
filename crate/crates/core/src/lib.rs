//! Clarke subdifferentials, generalized-invexity certification, Pareto and
//! KKT machinery for nonsmooth optimization problems with a fuzzy-valued
//! objective `a · s(x) - b`.
//!
//! The building blocks, bottom up:
//!
//! - [`expr`] parses and differentiates expressions in `x` (and `u`).
//! - [`fuzzy`] holds piecewise-linear fuzzy numbers and their α-cuts.
//! - [`nonsmooth`] computes exact 1-D Clarke subdifferentials of piecewise
//!   functions and sampled estimates for arbitrary ones.
//! - [`invexity`] certifies invexity and its pseudo, quasi and vector variants
//!   on pair grids, reporting witnesses.
//! - [`pareto`] enumerates fronts of small vector problems and solves
//!   weighted-sum and stationarity systems.
//! - [`kkt`] verifies or searches KKT multipliers with the simplex in [`lp`].
//! - [`fop`] ties these together per α level: endpoint problems,
//!   nondominance oracles and sufficiency-theorem pipelines.
//! - [`problem`] reads the line-oriented problem format and [`fixtures`]
//!   bundles the worked examples and the counterexample catalog.
//!
//! Grid sweeps run through [`exec`], which uses rayon under the default
//! `parallel` feature.

pub mod exec;
pub mod grid;
pub mod lp;

pub mod expr;
pub mod fuzzy;
pub mod nonsmooth;

pub mod invexity;
pub mod kkt;
pub mod pareto;

pub mod fop;
pub mod problem;
pub mod fixtures;
