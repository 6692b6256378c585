//! Linear description of the set of deviation-rule kernels.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{LinearProgram, LpSolution, Relation, Sense, VarId};
use crate::model::rational::Rational;
use crate::model::{DecisionProblem, LeafId, NodeId};

/// Kernel variables `D(b|a)` indexed `[a][b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelVars {
    pub kernel: Vec<Vec<VarId>>,
}

impl KernelVars {
    pub fn get(&self, input: LeafId, output: LeafId) -> VarId {
        self.kernel[input][output]
    }

    /// Reads the kernel out of an optimal solution.
    pub fn extract(&self, solution: &LpSolution) -> Vec<Vec<Rational>> {
        self.kernel
            .iter()
            .map(|row| row.iter().map(|&v| solution.var(v).clone()).collect())
            .collect()
    }
}

/// Adds `D(b|a) ∈ [0, 1]`, one density row per input and the adaptedness
/// equalities to `lp`.
///
/// Adaptedness: for each `t < T` and each pair of inputs with the same padded
/// length-`t` prefix, every padded length-`t` output prefix receives equal
/// mass. Each class is tied to its first member, so a class of size `k`
/// contributes `k − 1` equalities per output prefix.
pub fn add_deviation_polytope(lp: &mut LinearProgram, problem: &DecisionProblem) -> KernelVars {
    let n = problem.n_leaves();
    let label = |l: LeafId| problem.leaf_label(l);
    let kernel: Vec<Vec<VarId>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| lp.add_var(format!("D[{}->{}]", label(a), label(b)), Some(Rational::zero()), Some(Rational::one())))
                .collect()
        })
        .collect();

    for (a, row) in kernel.iter().enumerate() {
        lp.add_constraint(
            format!("density[{}]", label(a)),
            row.iter().map(|&v| (v, Rational::one())).collect(),
            Relation::Eq,
            Rational::one(),
        );
    }

    for t in 1..problem.periods() {
        // Input classes and output prefixes are the same partition of leaves.
        let mut classes: BTreeMap<NodeId, Vec<LeafId>> = BTreeMap::new();
        for leaf in 0..n {
            classes.entry(problem.prefix(leaf, t)).or_default().push(leaf);
        }
        for members in classes.values().filter(|m| m.len() > 1) {
            let rep = members[0];
            for &other in &members[1..] {
                for (&q, targets) in &classes {
                    let mut terms = Vec::with_capacity(2 * targets.len());
                    for &b in targets {
                        terms.push((kernel[other][b], Rational::one()));
                        terms.push((kernel[rep][b], -Rational::one()));
                    }
                    lp.add_constraint(
                        format!(
                            "adapted[t={t},{}~{},q={}]",
                            label(rep),
                            label(other),
                            problem.tree().path(q).join(",")
                        ),
                        terms,
                        Relation::Eq,
                        Rational::zero(),
                    );
                }
            }
        }
    }
    KernelVars { kernel }
}

/// Stand-alone program holding only the polytope block and a zero objective.
pub fn deviation_polytope_constraints(problem: &DecisionProblem) -> (LinearProgram, KernelVars) {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let vars = add_deviation_polytope(&mut lp, problem);
    (lp, vars)
}
