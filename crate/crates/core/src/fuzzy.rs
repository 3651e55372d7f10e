//! Piecewise-linear fuzzy numbers, α-cuts and endpoint functions.

use serde::Serialize;
use thiserror::Error;

use crate::nonsmooth::PiecewiseFn;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("a fuzzy number needs at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot x values must be strictly increasing (knot {index}: {x} after {prev})")]
    NotIncreasing { index: usize, prev: f64, x: f64 },
    #[error("membership {mu} at knot {index} is outside [0, 1]")]
    MuRange { index: usize, mu: f64 },
    #[error("first and last membership values must be 0")]
    OpenSupport,
    #[error("maximum membership is {0}, expected 1 (normality)")]
    NotNormal(f64),
    #[error("membership rises again at knot {index}; α-cuts would not be intervals")]
    NotQuasiConcave { index: usize },
    #[error("α = {0} is outside [0, 1]")]
    AlphaRange(f64),
    #[error("endpoint inversion at x = {x}, α = {alpha}: lower {lo} > upper {hi}")]
    Inversion { x: f64, alpha: f64, lo: f64, hi: f64 },
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi, "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Standard interval difference `[A.lo − B.hi, A.hi − B.lo]`.
    pub fn sub_cross(&self, b: &Interval) -> Interval {
        Interval { lo: self.lo - b.hi, hi: self.hi - b.lo }
    }

    /// Hukuhara difference `C` with `A = B + C`; exists iff `width(A) ≥ width(B)`.
    pub fn hukuhara(&self, b: &Interval) -> Option<Interval> {
        (self.width() >= b.width()).then(|| Interval { lo: self.lo - b.lo, hi: self.hi - b.hi })
    }

    pub fn add(&self, b: &Interval) -> Interval {
        Interval { lo: self.lo + b.lo, hi: self.hi + b.hi }
    }

    pub fn scale(&self, c: f64) -> Interval {
        let (a, b) = (c * self.lo, c * self.hi);
        Interval { lo: a.min(b), hi: a.max(b) }
    }
}

/// Fuzzy number with a piecewise-linear, normal, quasi-concave membership
/// function of compact support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyNumber {
    knots: Vec<(f64, f64)>,
}

fn check_alpha(a: f64) -> Result<(), FuzzyError> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(FuzzyError::AlphaRange(a))
    }
}

impl FuzzyNumber {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<FuzzyNumber, FuzzyError> {
        if knots.len() < 2 {
            return Err(FuzzyError::TooFewKnots(knots.len()));
        }
        for (i, &(x, mu)) in knots.iter().enumerate() {
            if !(0.0..=1.0).contains(&mu) {
                return Err(FuzzyError::MuRange { index: i, mu });
            }
            if i > 0 && !(x > knots[i - 1].0) {
                return Err(FuzzyError::NotIncreasing { index: i, prev: knots[i - 1].0, x });
            }
        }
        if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 0.0 {
            return Err(FuzzyError::OpenSupport);
        }
        let peak = knots.iter().map(|k| k.1).fold(0.0, f64::max);
        if peak != 1.0 {
            return Err(FuzzyError::NotNormal(peak));
        }
        let mut falling = false;
        for i in 1..knots.len() {
            let (prev, cur) = (knots[i - 1].1, knots[i].1);
            if cur < prev {
                falling = true;
            } else if cur > prev && falling {
                return Err(FuzzyError::NotQuasiConcave { index: i });
            }
        }
        Ok(FuzzyNumber { knots })
    }

    /// Triangular number with support `[a, c]` and peak `b`.
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<FuzzyNumber, FuzzyError> {
        FuzzyNumber::new(vec![(a, 0.0), (b, 1.0), (c, 0.0)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn membership(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x < k[0].0 || x > k[k.len() - 1].0 {
            return 0.0;
        }
        for w in k.windows(2) {
            let ((x0, m0), (x1, m1)) = (w[0], w[1]);
            if x <= x1 {
                if x == x1 {
                    return m1;
                }
                return m0 + (m1 - m0) * (x - x0) / (x1 - x0);
            }
        }
        0.0
    }

    /// Exact α-cut. The 0-cut is the closure of the support.
    pub fn alpha_cut(&self, a: f64) -> Result<Interval, FuzzyError> {
        check_alpha(a)?;
        let k = &self.knots;
        if a == 0.0 {
            let first = k.iter().position(|p| p.1 > 0.0).expect("normal");
            let last = k.iter().rposition(|p| p.1 > 0.0).expect("normal");
            return Ok(Interval::new(k[first - 1].0, k[last + 1].0));
        }
        let i = k.iter().position(|p| p.1 >= a).expect("normal");
        let lo = if k[i].1 == a {
            k[i].0
        } else {
            let ((x0, m0), (x1, m1)) = (k[i - 1], k[i]);
            x0 + (a - m0) / (m1 - m0) * (x1 - x0)
        };
        let j = k.iter().rposition(|p| p.1 >= a).expect("normal");
        let hi = if k[j].1 == a {
            k[j].0
        } else {
            let ((x0, m0), (x1, m1)) = (k[j], k[j + 1]);
            x0 + (m0 - a) / (m0 - m1) * (x1 - x0)
        };
        Ok(Interval::new(lo, hi))
    }
}

/// The constant subtracted from a fuzzy objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Subtrahend {
    Fuzzy(FuzzyNumber),
    Crisp(f64),
}

impl Subtrahend {
    pub fn alpha_cut(&self, a: f64) -> Result<Interval, FuzzyError> {
        match self {
            Subtrahend::Fuzzy(u) => u.alpha_cut(a),
            Subtrahend::Crisp(c) => check_alpha(a).map(|_| Interval::point(*c)),
        }
    }
}

/// `f̃(x) = ã · s(x) ⊖ b̃` with a crisp shape function `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyObjective {
    pub coefficient: FuzzyNumber,
    pub shape: PiecewiseFn,
    pub subtrahend: Subtrahend,
}

/// Endpoint values at one `(x, α)`, with the Hukuhara reading alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endpoints {
    pub cross: Interval,
    /// `None` when the Hukuhara difference does not exist.
    pub hukuhara: Option<Interval>,
}

impl Endpoints {
    pub fn readings_differ(&self) -> bool {
        self.hukuhara.is_none_or(|h| h != self.cross)
    }
}

impl FuzzyObjective {
    /// `[a_L s − b_R, a_R s − b_L]`.
    pub fn eval_endpoints(&self, x: f64, a: f64) -> Result<Interval, FuzzyError> {
        let ac = self.coefficient.alpha_cut(a)?;
        let bc = self.subtrahend.alpha_cut(a)?;
        let s = self.shape.eval(x);
        let lo = ac.lo * s - bc.hi;
        let hi = ac.hi * s - bc.lo;
        if lo > hi {
            return Err(FuzzyError::Inversion { x, alpha: a, lo, hi });
        }
        Ok(Interval::new(lo, hi))
    }

    /// Both subtraction readings at `(x, α)`.
    pub fn endpoints_both(&self, x: f64, a: f64) -> Result<Endpoints, FuzzyError> {
        let cross = self.eval_endpoints(x, a)?;
        let ac = self.coefficient.alpha_cut(a)?;
        let product = ac.scale(self.shape.eval(x));
        let hukuhara = product.hukuhara(&self.subtrahend.alpha_cut(a)?);
        Ok(Endpoints { cross, hukuhara })
    }

    /// `(f^L(·, α), f^R(·, α))` as piecewise functions of `x`.
    pub fn endpoint_fns(&self, a: f64) -> Result<(PiecewiseFn, PiecewiseFn), FuzzyError> {
        let ac = self.coefficient.alpha_cut(a)?;
        let bc = self.subtrahend.alpha_cut(a)?;
        Ok((self.shape.scaled("f_L", ac.lo, -bc.hi), self.shape.scaled("f_R", ac.hi, -bc.lo)))
    }

    /// `λ₁ a_L(α) + λ₂ a_R(α)`: the slope the weighted endpoint pair puts on `s`.
    pub fn weighted_coefficient(&self, a: f64, lambda: (f64, f64)) -> Result<f64, FuzzyError> {
        let ac = self.coefficient.alpha_cut(a)?;
        Ok(lambda.0 * ac.lo + lambda.1 * ac.hi)
    }
}
