//! Dense two-phase simplex for tiny linear programs.
//!
//! Minimizes `cᵀx` subject to row constraints and `x ≥ 0`. Pivoting follows
//! Bland's rule (lowest eligible index for both entering and leaving
//! variables), so the pivot sequence is a pure function of the input.

const EPS: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

/// `minimize objective·x` over `rows`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lp {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    PivotLimit,
}

impl LpOutcome {
    pub fn solution(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

impl Lp {
    /// Pure feasibility problem in `n` variables.
    pub fn feasibility(n: usize) -> Lp {
        Lp { objective: vec![0.0; n], rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<f64>, rel: Rel, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push(Row { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    first_art: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &Lp) -> Tableau {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.rel != Rel::Eq).count();
        let first_art = n + n_slack;
        let mut rows: Vec<(Vec<f64>, Rel, f64)> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let rel = match r.rel {
                        Rel::Le => Rel::Ge,
                        Rel::Ge => Rel::Le,
                        Rel::Eq => Rel::Eq,
                    };
                    (r.coeffs.iter().map(|c| -c).collect(), rel, -r.rhs)
                } else {
                    (r.coeffs.clone(), r.rel, r.rhs)
                }
            })
            .collect();
        let n_art = rows.iter().filter(|r| r.1 != Rel::Le).count();
        let cols = first_art + n_art;
        let mut t = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (n, first_art);
        for (i, (coeffs, rel, rhs)) in rows.drain(..).enumerate() {
            t[i][..n].copy_from_slice(&coeffs);
            t[i][cols] = rhs;
            match rel {
                Rel::Le => {
                    t[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Rel::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Rel::Eq => {
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Tableau { t, basis, n, first_art, cols }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Optimize `cost` over the columns `< allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<bool, ()> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                let reduced = cost[j]
                    - self.basis.iter().zip(&self.t).map(|(&b, r)| cost[b] * r[j]).sum::<f64>();
                reduced < -EPS
            });
            let Some(col) = entering else { return Ok(true) };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, r) in self.t.iter().enumerate() {
                if r[col] > EPS {
                    let ratio = r[self.cols] / r[col];
                    let better = match best {
                        None => true,
                        Some((br, _, bvar)) => {
                            ratio < br - EPS || (ratio <= br + EPS && self.basis[i] < bvar)
                        }
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                None => return Ok(false),
                Some((_, row, _)) => self.pivot(row, col),
            }
        }
        Err(())
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.t).map(|(&b, r)| cost[b] * r[self.cols]).sum()
    }

    fn run(mut self, objective: &[f64]) -> LpOutcome {
        if self.first_art < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.first_art) {
                *c = 1.0;
            }
            match self.optimize(&phase1, self.cols) {
                Err(()) => return LpOutcome::PivotLimit,
                Ok(_) => {}
            }
            let scale = 1.0 + self.t.iter().map(|r| r[self.cols].abs()).fold(0.0, f64::max);
            if self.value(&phase1) > FEAS_TOL * scale {
                return LpOutcome::Infeasible;
            }
            // drive remaining artificials out of the basis, dropping redundant rows
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.first_art {
                    match (0..self.first_art).find(|&j| self.t[i][j].abs() > EPS) {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.n].copy_from_slice(objective);
        match self.optimize(&cost, self.first_art) {
            Err(()) => LpOutcome::PivotLimit,
            Ok(false) => LpOutcome::Unbounded,
            Ok(true) => {
                let mut x = vec![0.0; self.n];
                for (&b, r) in self.basis.iter().zip(&self.t) {
                    if b < self.n {
                        x[b] = r[self.cols].max(0.0);
                    }
                }
                let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                LpOutcome::Optimal { x, value }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18
        let mut lp = Lp { objective: vec![-3.0, -5.0], rows: vec![] };
        lp.push(vec![1.0, 0.0], Rel::Le, 4.0);
        lp.push(vec![0.0, 2.0], Rel::Le, 12.0);
        lp.push(vec![3.0, 2.0], Rel::Le, 18.0);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
                assert!((value + 36.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge() {
        // min x + y s.t. x + y = 1, x ≥ 0.25
        let mut lp = Lp { objective: vec![1.0, 1.0], rows: vec![] };
        lp.push(vec![1.0, 1.0], Rel::Eq, 1.0);
        lp.push(vec![1.0, 0.0], Rel::Ge, 0.25);
        let x = lp.solve().solution().unwrap().to_vec();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12 && x[0] >= 0.25 - 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = Lp::feasibility(1);
        lp.push(vec![1.0], Rel::Ge, 2.0);
        lp.push(vec![1.0], Rel::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = Lp { objective: vec![-1.0], rows: vec![] };
        lp.push(vec![1.0], Rel::Ge, 0.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        let mut lp = Lp::feasibility(2);
        lp.push(vec![-1.0, -1.0], Rel::Eq, -2.0);
        lp.push(vec![2.0, 2.0], Rel::Eq, 4.0);
        let x = lp.solve().solution().unwrap().to_vec();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule; Bland terminates.
        let mut lp = Lp { objective: vec![-0.75, 150.0, -0.02, 6.0], rows: vec![] };
        lp.push(vec![0.25, -60.0, -0.04, 9.0], Rel::Le, 0.0);
        lp.push(vec![0.5, -90.0, -0.02, 3.0], Rel::Le, 0.0);
        lp.push(vec![0.0, 0.0, 1.0, 0.0], Rel::Le, 1.0);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value + 0.05).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
