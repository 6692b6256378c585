//! Bounded-variable simplex in dictionary form.
//!
//! Every constraint row `i` gets a row variable `r_i = Σ a_ij x_j` whose
//! bounds encode the relation, so the program becomes "all variables within
//! bounds, subject to `r = A x`". The dictionary expresses each basic
//! variable as a combination of the `n` nonbasic ones, so its width never
//! changes and slack columns are never materialized.
//!
//! Phase 1 is the general-simplex feasibility check: repair the
//! smallest-index basic variable that is out of bounds by pivoting with the
//! smallest-index nonbasic variable that can move it. Phase 2 is the primal
//! bounded simplex. Both use Bland's rule (smallest variable index), which
//! rules out cycling.

use num_traits::{Signed, Zero};

use super::{LinearProgram, LpSolution, LpStatus, Relation, Sense};
use crate::model::rational::Rational;

/// Far beyond anything Bland's rule needs on desk-scale programs.
const PIVOT_GUARD: u64 = 50_000_000;

struct Dictionary {
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    value: Vec<Rational>,
    /// `basis[row]` is the variable expressed by `rows[row]`.
    basis: Vec<usize>,
    /// `nonbasic[col]` is the variable multiplying column `col`.
    nonbasic: Vec<usize>,
    rows: Vec<Vec<Rational>>,
    /// Reduced costs over nonbasic columns during phase 2.
    objective: Option<Vec<Rational>>,
    pivots: u64,
}

pub(super) fn run(lp: &LinearProgram) -> LpSolution {
    let mut dict = Dictionary::new(lp);
    if !dict.make_feasible() {
        return LpSolution {
            status: LpStatus::Infeasible,
            value: None,
            assignment: Vec::new(),
            pivots: dict.pivots,
        };
    }
    let n = lp.variables.len();
    let mut cost = vec![Rational::zero(); n + lp.constraints.len()];
    for (v, c) in &lp.objective {
        cost[v.0] += match lp.sense {
            Sense::Maximize => c.clone(),
            Sense::Minimize => -c.clone(),
        };
    }
    let bounded = dict.maximize(&cost);
    if !bounded {
        return LpSolution {
            status: LpStatus::Unbounded,
            value: None,
            assignment: Vec::new(),
            pivots: dict.pivots,
        };
    }
    let assignment: Vec<Rational> = dict.value[..n].to_vec();
    let value = lp.objective_value(&assignment);
    LpSolution {
        status: LpStatus::Optimal,
        value: Some(value),
        assignment,
        pivots: dict.pivots,
    }
}

impl Dictionary {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.variables.len();
        let m = lp.constraints.len();
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut value = Vec::with_capacity(n + m);
        for v in &lp.variables {
            lower.push(v.lower.clone());
            upper.push(v.upper.clone());
            value.push(v.lower.clone().or_else(|| v.upper.clone()).unwrap_or_else(Rational::zero));
        }
        let mut rows = Vec::with_capacity(m);
        for c in &lp.constraints {
            let mut row = vec![Rational::zero(); n];
            for (v, coef) in &c.terms {
                row[v.0] += coef;
            }
            let activity: Rational = row
                .iter()
                .zip(&value)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, x)| a * x)
                .sum();
            value.push(activity);
            let (lo, hi) = match c.relation {
                Relation::Le => (None, Some(c.rhs.clone())),
                Relation::Ge => (Some(c.rhs.clone()), None),
                Relation::Eq => (Some(c.rhs.clone()), Some(c.rhs.clone())),
            };
            lower.push(lo);
            upper.push(hi);
            rows.push(row);
        }
        Dictionary {
            lower,
            upper,
            value,
            basis: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            rows,
            objective: None,
            pivots: 0,
        }
    }

    fn below_lower(&self, v: usize) -> bool {
        self.lower[v].as_ref().is_some_and(|l| &self.value[v] < l)
    }

    fn above_upper(&self, v: usize) -> bool {
        self.upper[v].as_ref().is_some_and(|u| &self.value[v] > u)
    }

    fn can_increase(&self, v: usize) -> bool {
        self.upper[v].as_ref().is_none_or(|u| &self.value[v] < u)
    }

    fn can_decrease(&self, v: usize) -> bool {
        self.lower[v].as_ref().is_none_or(|l| &self.value[v] > l)
    }

    /// Phase 1. Returns false when the bounds are jointly infeasible.
    fn make_feasible(&mut self) -> bool {
        loop {
            let violated = self
                .basis
                .iter()
                .enumerate()
                .filter(|&(_, &v)| self.below_lower(v) || self.above_upper(v))
                .min_by_key(|&(_, &v)| v)
                .map(|(r, &v)| (r, v));
            let Some((row, var)) = violated else { return true };
            let increase = self.below_lower(var);
            let target = if increase {
                self.lower[var].clone()
            } else {
                self.upper[var].clone()
            }
            .expect("violated bound exists");
            let entering = self.rows[row]
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .filter(|&(col, a)| {
                    let x = self.nonbasic[col];
                    if a.is_positive() == increase {
                        self.can_increase(x)
                    } else {
                        self.can_decrease(x)
                    }
                })
                .min_by_key(|&(col, _)| self.nonbasic[col])
                .map(|(col, _)| col);
            let Some(col) = entering else { return false };
            let theta = (&target - &self.value[var]) / &self.rows[row][col];
            self.shift(col, &theta);
            self.pivot(row, col);
        }
    }

    /// Phase 2 from a feasible dictionary. Returns false when unbounded.
    fn maximize(&mut self, cost: &[Rational]) -> bool {
        let mut reduced: Vec<Rational> = self.nonbasic.iter().map(|&v| cost[v].clone()).collect();
        for (row, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (r, a) in reduced.iter_mut().zip(&self.rows[row]) {
                if !a.is_zero() {
                    *r += &cost[b] * a;
                }
            }
        }
        self.objective = Some(reduced);

        loop {
            let reduced = self.objective.as_ref().expect("objective row present");
            let entering = reduced
                .iter()
                .enumerate()
                .filter(|(_, d)| !d.is_zero())
                .filter(|&(col, d)| {
                    let x = self.nonbasic[col];
                    if d.is_positive() {
                        self.can_increase(x)
                    } else {
                        self.can_decrease(x)
                    }
                })
                .min_by_key(|&(col, _)| self.nonbasic[col])
                .map(|(col, d)| (col, d.is_positive()));
            let Some((col, up)) = entering else {
                self.objective = None;
                return true;
            };
            let x = self.nonbasic[col];
            let own_limit = if up {
                self.upper[x].as_ref().map(|u| u - &self.value[x])
            } else {
                self.lower[x].as_ref().map(|l| &self.value[x] - l)
            };

            // Ratio test; ties go to the smallest basic variable index.
            let mut leaving: Option<(Rational, usize, usize)> = None;
            for (row, r) in self.rows.iter().enumerate() {
                let a = &r[col];
                if a.is_zero() {
                    continue;
                }
                let b = self.basis[row];
                let rises = a.is_positive() == up;
                let limit = if rises {
                    self.upper[b].as_ref().map(|u| (u - &self.value[b]) / a.abs())
                } else {
                    self.lower[b].as_ref().map(|l| (&self.value[b] - l) / a.abs())
                };
                let Some(limit) = limit else { continue };
                let better = match &leaving {
                    None => true,
                    Some((best, _, best_var)) => limit < *best || (limit == *best && b < *best_var),
                };
                if better {
                    leaving = Some((limit, row, b));
                }
            }

            let step_sign = |t: Rational| if up { t } else { -t };
            match (own_limit, leaving) {
                (None, None) => {
                    self.objective = None;
                    return false;
                }
                (Some(own), Some((limit, _, _))) if own <= limit => {
                    self.shift(col, &step_sign(own));
                }
                (Some(own), None) => {
                    self.shift(col, &step_sign(own));
                }
                (_, Some((limit, row, _))) => {
                    self.shift(col, &step_sign(limit));
                    self.pivot(row, col);
                }
            }
        }
    }

    /// Moves nonbasic column `col` by `delta`, updating every basic value.
    fn shift(&mut self, col: usize, delta: &Rational) {
        if delta.is_zero() {
            return;
        }
        let x = self.nonbasic[col];
        self.value[x] += delta;
        for (row, r) in self.rows.iter().enumerate() {
            let a = &r[col];
            if !a.is_zero() {
                self.value[self.basis[row]] += a * delta;
            }
        }
    }

    /// Exchanges basic `basis[row]` with nonbasic `nonbasic[col]`.
    fn pivot(&mut self, row: usize, col: usize) {
        self.pivots += 1;
        assert!(self.pivots < PIVOT_GUARD, "simplex pivot guard exceeded");
        let inv = self.rows[row][col].recip();
        let mut pivot_row = std::mem::take(&mut self.rows[row]);
        for (k, a) in pivot_row.iter_mut().enumerate() {
            if k == col {
                *a = inv.clone();
            } else if !a.is_zero() {
                *a = -(&*a * &inv);
            }
        }
        let support: Vec<usize> = (0..pivot_row.len()).filter(|&k| !pivot_row[k].is_zero()).collect();
        let eliminate = |target: &mut Vec<Rational>| {
            let factor = std::mem::replace(&mut target[col], Rational::zero());
            if factor.is_zero() {
                return;
            }
            for &k in &support {
                let delta = &factor * &pivot_row[k];
                if k == col {
                    target[k] = delta;
                } else {
                    target[k] += delta;
                }
            }
        };
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row {
                eliminate(r);
            }
        }
        if let Some(obj) = self.objective.as_mut() {
            eliminate(obj);
        }
        self.rows[row] = pivot_row;

        let leaving = self.basis[row];
        let entering = self.nonbasic[col];
        self.basis[row] = entering;
        self.nonbasic[col] = leaving;
    }
}
