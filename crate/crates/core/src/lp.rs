//! Dense two-phase tableau simplex over exact rationals.
//!
//! Bland's rule picks both the entering and the leaving variable, so the
//! method terminates on degenerate problems. Sizes in this crate are small
//! (at most a few hundred columns), which keeps a dense tableau practical.

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, Rational)>,
    relation: Relation,
    rhs: Rational,
}

/// `maximize c.x` subject to linear rows and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<Rational>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub x: Vec<Rational>,
    /// One multiplier per row, in insertion order. Signs follow the
    /// maximization convention: `Le` rows get `y >= 0`, `Ge` rows `y <= 0`,
    /// `Eq` rows are free, and `A^T y >= c` with `b.y` equal to the optimum.
    pub duals: Vec<Rational>,
    pub objective: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(n: usize) -> Self {
        LinearProgram { n, objective: vec![Rational::zero(); n], rows: Vec::new() }
    }

    pub fn var_count(&self) -> usize {
        self.n
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, j: usize, c: Rational) {
        self.objective[j] = c;
    }

    pub fn set_objective_vec(&mut self, c: Vec<Rational>) {
        assert_eq!(c.len(), self.n);
        self.objective = c;
    }

    /// Adds a row and returns its index.
    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> usize {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.n));
        self.rows.push(Row { coeffs, relation, rhs });
        self.rows.len() - 1
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    a: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    /// Column holding the initial unit vector of each row.
    unit_col: Vec<usize>,
    /// Rows multiplied by -1 to make their right-hand side nonnegative.
    flipped: Vec<bool>,
    cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let mut kinds = vec![ColKind::Structural; lp.n];
        let mut rel = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        for r in &lp.rows {
            let flip = r.rhs.is_negative();
            flipped.push(flip);
            rel.push(match (r.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (other, _) => other,
            });
        }
        let mut slack_col = vec![None; m];
        for (i, r) in rel.iter().enumerate() {
            if *r != Relation::Eq {
                slack_col[i] = Some(kinds.len());
                kinds.push(ColKind::Slack);
            }
        }
        let mut unit_col = vec![0; m];
        let mut basis = vec![0; m];
        for (i, r) in rel.iter().enumerate() {
            if *r == Relation::Le {
                unit_col[i] = slack_col[i].unwrap();
            } else {
                unit_col[i] = kinds.len();
                kinds.push(ColKind::Artificial);
            }
            basis[i] = unit_col[i];
        }
        let cols = kinds.len();
        let mut a = vec![vec![Rational::zero(); cols + 1]; m];
        for (i, r) in lp.rows.iter().enumerate() {
            let sign = if flipped[i] { -Rational::one() } else { Rational::one() };
            for (j, v) in &r.coeffs {
                a[i][*j] += v * &sign;
            }
            a[i][cols] = &r.rhs * &sign;
            if let Some(s) = slack_col[i] {
                a[i][s] = if rel[i] == Relation::Le { Rational::one() } else { -Rational::one() };
            }
            if kinds[unit_col[i]] == ColKind::Artificial {
                a[i][unit_col[i]] = Rational::one();
            }
        }
        Tableau { a, basis, kinds, unit_col, flipped, cols }
    }

    /// Reduced-cost row `c_j - c_B B^-1 A_j` for cost vector `cost`, plus
    /// the current objective value in the last slot.
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut r: Vec<Rational> = cost.to_vec();
        r.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.cols {
                if !self.a[i][j].is_zero() {
                    let d = cb * &self.a[i][j];
                    r[j] -= d;
                }
            }
        }
        // r[cols] now holds -c_B.b; flip so it reads as the objective.
        r[self.cols] = -&r[self.cols];
        r
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: &mut [Rational]) {
        let p = self.a[row][col].clone();
        if p != Rational::one() {
            for v in self.a[row].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &p;
                }
            }
        }
        let pivot_row = self.a[row].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let f = r[col].clone();
            for &j in &nz {
                let d = &f * &pivot_row[j];
                r[j] -= d;
            }
        }
        let f = reduced[col].clone();
        if !f.is_zero() {
            for &j in &nz {
                let d = &f * &pivot_row[j];
                if j == self.cols {
                    // Objective slot holds +value, so it moves the other way.
                    reduced[j] += d;
                } else {
                    reduced[j] -= d;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland-rule iterations maximizing the cost behind `reduced`.
    /// Returns false if unbounded.
    fn iterate(&mut self, reduced: &mut [Rational], allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let Some(col) = (0..self.cols).find(|&j| allowed(j) && reduced[j].is_positive()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][col];
                if !aij.is_positive() {
                    continue;
                }
                let ratio = &self.a[i][self.cols] / aij;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((row, _)) = best else {
                return false;
            };
            self.pivot(row, col, reduced);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let has_artificial = self.kinds.contains(&ColKind::Artificial);
        if has_artificial {
            let cost: Vec<Rational> = self
                .kinds
                .iter()
                .map(|k| if *k == ColKind::Artificial { -Rational::one() } else { Rational::zero() })
                .collect();
            let mut reduced = self.reduced_costs(&cost);
            self.iterate(&mut reduced, |_| true);
            if reduced[self.cols].is_negative() {
                return LpOutcome::Infeasible;
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.a.len() {
                if self.kinds[self.basis[i]] != ColKind::Artificial {
                    continue;
                }
                if let Some(j) =
                    (0..self.cols).find(|&j| self.kinds[j] != ColKind::Artificial && !self.a[i][j].is_zero())
                {
                    self.pivot(i, j, &mut reduced);
                }
            }
        }

        let mut cost = vec![Rational::zero(); self.cols];
        cost[..lp.n].clone_from_slice(&lp.objective);
        let mut reduced = self.reduced_costs(&cost);
        let kinds = self.kinds.clone();
        if !self.iterate(&mut reduced, |j| kinds[j] != ColKind::Artificial) {
            return LpOutcome::Unbounded;
        }

        let mut x = vec![Rational::zero(); lp.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < lp.n {
                x[b] = self.a[i][self.cols].clone();
            }
        }
        // y_i = c_B B^-1 e_i = c_k - reduced_k for the unit column k of row
        // i, and c_k = 0 for slack and artificial columns.
        let duals = (0..self.a.len())
            .map(|i| {
                let y = -&reduced[self.unit_col[i]];
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        LpOutcome::Optimal(LpSolution { x, duals, objective: reduced[self.cols].clone() })
    }
}
