//! Exact rational linear programming.
//!
//! [`LinearProgram`] is a small model builder (named variables with optional
//! bounds, `≤ / = / ≥` rows, a linear objective). [`solve`] runs a
//! bounded-variable simplex over exact rationals with Bland's rule in both
//! phases, so results are deterministic and strict `> 0` tests on optimal
//! values are exact.

mod polytope;
mod simplex;

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::model::rational::{format_rational, Rational};

pub use polytope::{add_deviation_polytope, deviation_polytope_constraints, KernelVars};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, point: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, c)| c * &point[v.0]).sum()
    }

    pub fn is_satisfied(&self, point: &[Rational]) -> bool {
        let lhs = self.lhs(point);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, Rational)>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rational>, upper: Option<Rational>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    /// Variable bounded below by zero.
    pub fn nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(Rational::zero()), None)
    }

    pub fn free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, None, None)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.variables.len()));
        self.constraints.push(Constraint {
            name: name.into(),
            terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, Rational)>) {
        self.objective = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    }

    pub fn objective_value(&self, point: &[Rational]) -> Rational {
        self.objective.iter().map(|(v, c)| c * &point[v.0]).sum()
    }

    /// Exact membership test for the feasible region (bounds and rows).
    pub fn is_feasible_point(&self, point: &[Rational]) -> bool {
        point.len() == self.variables.len()
            && self.variables.iter().zip(point).all(|(v, x)| {
                v.lower.as_ref().is_none_or(|l| x >= l) && v.upper.as_ref().is_none_or(|u| x <= u)
            })
            && self.constraints.iter().all(|c| c.is_satisfied(point))
    }

    /// Human-readable dump in an LP-file-like syntax. Not a stable format.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let name = |v: &VarId| self.variables[v.0].name.clone();
        let expr = |terms: &[(VarId, Rational)]| -> String {
            if terms.is_empty() {
                return "0".into();
            }
            let mut s = String::new();
            for (i, (v, c)) in terms.iter().enumerate() {
                let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
                if i > 0 || sign == "-" {
                    let _ = write!(s, "{}{} ", if i > 0 { " " } else { "" }, sign);
                }
                if mag.is_one() {
                    s.push_str(&name(v));
                } else {
                    let _ = write!(s, "{} {}", format_rational(&mag), name(v));
                }
            }
            s
        };
        let _ = writeln!(
            out,
            "{}",
            match self.sense {
                Sense::Maximize => "maximize",
                Sense::Minimize => "minimize",
            }
        );
        let _ = writeln!(out, "  obj: {}", expr(&self.objective));
        let _ = writeln!(out, "subject to");
        for c in &self.constraints {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, "  {}: {} {} {}", c.name, expr(&c.terms), rel, format_rational(&c.rhs));
        }
        let _ = writeln!(out, "bounds");
        for v in &self.variables {
            match (&v.lower, &v.upper) {
                (None, None) => {
                    let _ = writeln!(out, "  {} free", v.name);
                }
                (Some(l), None) => {
                    let _ = writeln!(out, "  {} >= {}", v.name, format_rational(l));
                }
                (None, Some(u)) => {
                    let _ = writeln!(out, "  {} <= {}", v.name, format_rational(u));
                }
                (Some(l), Some(u)) => {
                    let _ = writeln!(out, "  {} <= {} <= {}", format_rational(l), v.name, format_rational(u));
                }
            }
        }
        out.push_str("end\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective value (in the program's own sense).
    pub value: Option<Rational>,
    /// One value per variable when optimal, empty otherwise.
    pub assignment: Vec<Rational>,
    pub pivots: u64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn var(&self, v: VarId) -> &Rational {
        &self.assignment[v.0]
    }

    /// True when optimal with a value strictly above zero.
    pub fn is_positive(&self) -> bool {
        self.value.as_ref().is_some_and(Rational::is_positive)
    }
}

/// Solves `lp` exactly. Deterministic: identical programs give identical
/// solutions.
///
/// Panics if the pivot guard trips or an optimal assignment fails exact
/// re-verification; both indicate a solver bug, not a property of the input.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let solution = simplex::run(lp);
    if solution.is_optimal() {
        assert!(
            lp.is_feasible_point(&solution.assignment),
            "simplex returned an assignment that violates the program"
        );
        debug_assert_eq!(
            solution.value.as_ref(),
            Some(&lp.objective_value(&solution.assignment))
        );
    }
    solution
}
