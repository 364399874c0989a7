//! Exact rational linear programming.
//!
//! A dense two-phase simplex over [`Rational`] with Bland's rule for both the
//! entering and the leaving variable, so it terminates on degenerate
//! problems. Problem sizes here are tens of variables, so a dense tableau is
//! the simplest thing that works.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::model::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn holds(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// A linear program. Variables default to a lower bound of zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<Rational>,
    pub direction: Direction,
    /// Lower bound per variable; `None` marks a free variable.
    pub lower: Vec<Option<Rational>>,
}

impl LinearProgram {
    pub fn new(variables: Vec<String>) -> Self {
        let n = variables.len();
        LinearProgram {
            variables,
            constraints: Vec::new(),
            objective: vec![Rational::zero(); n],
            direction: Direction::Maximize,
            lower: vec![Some(Rational::zero()); n],
        }
    }

    /// A program over `n` anonymous variables `x0, x1, ...`.
    pub fn with_vars(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("x{i}")).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars(), "row length must match variable count");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds a row given by (variable, coefficient) pairs; repeated variables
    /// accumulate.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (j, a) in terms {
            coeffs[*j] += a;
        }
        self.add(coeffs, relation, rhs);
    }

    pub fn set_objective(&mut self, direction: Direction, coeffs: Vec<Rational>) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.direction = direction;
        self.objective = coeffs;
    }

    pub fn set_free(&mut self, var: usize) {
        self.lower[var] = None;
    }

    /// Exact feasibility check of a point.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self.lower.iter().zip(x).all(|(l, v)| l.as_ref().is_none_or(|l| v >= l))
            && self.constraints.iter().all(|c| c.holds(x))
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal {
        solution: Vec<Rational>,
        value: Rational,
    },
    /// `point + λ·ray` is feasible for all λ ≥ 0 and improves the objective
    /// without bound.
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
    Infeasible,
}

/// Counters accumulated by the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct SolveStats {
    pub lps: u64,
    pub pivots: u64,
}

impl std::ops::AddAssign for SolveStats {
    fn add_assign(&mut self, other: Self) {
        self.lps += other.lps;
        self.pivots += other.pivots;
    }
}

/// How an original variable maps onto tableau columns.
#[derive(Clone)]
enum VarMap {
    Shifted { col: usize, lower: Rational },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs for maximization.
    reduced: Vec<Rational>,
    banned: Vec<bool>,
    vars: Vec<VarMap>,
    first_artificial: usize,
    pivots: u64,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let mut vars = Vec::with_capacity(lp.num_vars());
        let mut ncols = 0;
        for l in &lp.lower {
            match l {
                Some(lower) => {
                    vars.push(VarMap::Shifted {
                        col: ncols,
                        lower: lower.clone(),
                    });
                    ncols += 1;
                }
                None => {
                    vars.push(VarMap::Split {
                        pos: ncols,
                        neg: ncols + 1,
                    });
                    ncols += 2;
                }
            }
        }
        let structural = ncols;
        // Normalize rows to nonnegative right-hand sides.
        let mut normalized = Vec::with_capacity(lp.constraints.len());
        for c in &lp.constraints {
            let mut row = vec![Rational::zero(); structural];
            let mut rhs = c.rhs.clone();
            for (j, a) in c.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                match &vars[j] {
                    VarMap::Shifted { col, lower } => {
                        row[*col] += a;
                        rhs -= a * lower;
                    }
                    VarMap::Split { pos, neg } => {
                        row[*pos] += a;
                        row[*neg] -= a;
                    }
                }
            }
            let mut relation = c.relation;
            if rhs.is_negative() {
                for v in &mut row {
                    *v = -&*v;
                }
                rhs = -rhs;
                relation = match relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            normalized.push((row, relation, rhs));
        }
        let slack_count = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let artificial_count = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let first_artificial = structural + slack_count;
        let width = first_artificial + artificial_count;
        let mut rows = Vec::with_capacity(normalized.len());
        let mut rhs = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut next_slack, mut next_art) = (structural, first_artificial);
        for (mut row, relation, b) in normalized {
            row.resize(width, Rational::zero());
            match relation {
                Relation::Le => {
                    row[next_slack] = Rational::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -Rational::one();
                    next_slack += 1;
                    row[next_art] = Rational::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = Rational::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Tableau {
            rows,
            rhs,
            basis,
            reduced: vec![Rational::zero(); width],
            banned: vec![false; width],
            vars,
            first_artificial,
            pivots: 0,
        }
    }

    fn width(&self) -> usize {
        self.banned.len()
    }

    /// Installs reduced costs of the objective `cost` (maximization).
    fn price(&mut self, cost: &[Rational]) {
        let mut reduced = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in row.iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= cb * a;
                }
            }
        }
        self.reduced = reduced;
    }

    fn pivot(&mut self, r: usize, j: usize) {
        self.pivots += 1;
        let inv = self.rows[r][j].recip();
        for v in &mut self.rows[r] {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][j].is_zero() {
                continue;
            }
            let factor = self.rows[i][j].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if !self.reduced[j].is_zero() {
            let factor = self.reduced[j].clone();
            for (v, p) in self.reduced.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        self.basis[r] = j;
    }

    /// Runs simplex iterations with Bland's rule until optimal or unbounded.
    fn iterate(&mut self) -> Outcome {
        loop {
            let entering = (0..self.width()).find(|&j| !self.banned[j] && self.reduced[j].is_positive());
            let Some(j) = entering else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((best, best_ratio)) => {
                        ratio < *best_ratio || (ratio == *best_ratio && self.basis[i] < self.basis[*best])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, j),
                None => return Outcome::Unbounded(j),
            }
        }
    }

    /// Phase 1. Returns false if the program is infeasible; otherwise leaves
    /// a feasible basis without artificial variables.
    fn phase_one(&mut self) -> bool {
        let width = self.width();
        let cost: Vec<Rational> = (0..width)
            .map(|j| {
                if j >= self.first_artificial {
                    -Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        self.price(&cost);
        if let Outcome::Unbounded(_) = self.iterate() {
            unreachable!("phase 1 objective is bounded by zero");
        }
        let infeasibility: Rational = (0..self.rows.len())
            .filter(|&i| self.basis[i] >= self.first_artificial)
            .map(|i| self.rhs[i].clone())
            .sum();
        if infeasibility.is_positive() {
            return false;
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        // Redundant row.
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for j in self.first_artificial..width {
            self.banned[j] = true;
        }
        true
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut values = vec![Rational::zero(); self.width()];
        for (i, &b) in self.basis.iter().enumerate() {
            values[b] = self.rhs[i].clone();
        }
        values
    }

    fn to_original(&self, cols: &[Rational], shift: bool) -> Vec<Rational> {
        self.vars
            .iter()
            .map(|v| match v {
                VarMap::Shifted { col, lower } => {
                    if shift {
                        &cols[*col] + lower
                    } else {
                        cols[*col].clone()
                    }
                }
                VarMap::Split { pos, neg } => &cols[*pos] - &cols[*neg],
            })
            .collect()
    }
}

/// Solves `lp` exactly.
pub fn solve(lp: &LinearProgram) -> LpStatus {
    solve_with_stats(lp).0
}

pub fn solve_with_stats(lp: &LinearProgram) -> (LpStatus, SolveStats) {
    let mut tab = Tableau::build(lp);
    let mut stats = SolveStats { lps: 1, pivots: 0 };
    if !tab.phase_one() {
        stats.pivots = tab.pivots;
        return (LpStatus::Infeasible, stats);
    }
    let sign = match lp.direction {
        Direction::Maximize => Rational::one(),
        Direction::Minimize => -Rational::one(),
    };
    let mut cost = vec![Rational::zero(); tab.width()];
    for (j, c) in lp.objective.iter().enumerate() {
        let c = c * &sign;
        match &tab.vars[j] {
            VarMap::Shifted { col, .. } => cost[*col] = c,
            VarMap::Split { pos, neg } => {
                cost[*neg] = -&c;
                cost[*pos] = c;
            }
        }
    }
    tab.price(&cost);
    let outcome = tab.iterate();
    stats.pivots = tab.pivots;
    let cols = tab.column_values();
    let point = tab.to_original(&cols, true);
    let status = match outcome {
        Outcome::Optimal => {
            let value = lp.objective_value(&point);
            LpStatus::Optimal {
                solution: point,
                value,
            }
        }
        Outcome::Unbounded(j) => {
            let mut dir = vec![Rational::zero(); tab.width()];
            dir[j] = Rational::one();
            for (i, &b) in tab.basis.iter().enumerate() {
                dir[b] = -&tab.rows[i][j];
            }
            LpStatus::Unbounded {
                point,
                ray: tab.to_original(&dir, false),
            }
        }
    };
    (status, stats)
}

/// Any feasible point of `lp`, ignoring the objective.
pub fn feasible_point(lp: &LinearProgram) -> Option<Vec<Rational>> {
    feasible_point_with_stats(lp).0
}

pub fn feasible_point_with_stats(lp: &LinearProgram) -> (Option<Vec<Rational>>, SolveStats) {
    let mut tab = Tableau::build(lp);
    let feasible = tab.phase_one();
    let stats = SolveStats {
        lps: 1,
        pivots: tab.pivots,
    };
    if !feasible {
        return (None, stats);
    }
    let cols = tab.column_values();
    (Some(tab.to_original(&cols, true)), stats)
}

/// Multiplies `v` by the least common multiple of its denominators.
pub fn scale_to_integers(v: &[Rational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| (x * &lcm).to_integer()).collect()
}

/// The unique solution of `a·x = b`, if the system is consistent and has full
/// column rank. Rows may outnumber columns.
pub fn solve_linear_system(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..cols {
        let found = (pivot_row..rows).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot_row, found);
        let inv = m[pivot_row][col].recip();
        for v in &mut m[pivot_row] {
            *v *= &inv;
        }
        let pr = m[pivot_row].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != pivot_row && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pr) {
                    *v -= &f * p;
                }
            }
        }
        pivot_row += 1;
    }
    if m[pivot_row..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    Some((0..cols).map(|c| m[c][cols].clone()).collect())
}
