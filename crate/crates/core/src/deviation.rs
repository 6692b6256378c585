//! Deviation rules: adapted stochastic maps from action sequences to
//! lotteries over action sequences, and the dominance tests built on them.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::json_rational;
use crate::model::rational::{check_probability_vector, format_rational, Rational};
use crate::model::{ActionTree, DecisionProblem, JointDistribution, LeafId, MarginalDistribution, NodeId, StateId};

/// Default cap on the number of enumerated pure rules.
pub const DEFAULT_RULE_CAP: u64 = 1_000_000;

/// Kernel `D(b|a)` indexed `[a][b]`; row-stochastic and adapted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeviationRule {
    kernel: Vec<Vec<Rational>>,
}

/// Deterministic adapted rule, stored as the output leaf of each input leaf.
///
/// Because the rule is adapted, the period-`t` output depends only on the
/// length-`t` input prefix, so this table determines the per-period maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PureDeviationRule {
    outputs: Vec<LeafId>,
}

/// Leaves grouped by padded length-`t` prefix, for `t = 1 .. T−1`.
fn prefix_classes(problem: &DecisionProblem) -> Vec<Vec<Vec<LeafId>>> {
    (1..problem.periods())
        .map(|t| {
            let mut classes: BTreeMap<NodeId, Vec<LeafId>> = BTreeMap::new();
            for leaf in 0..problem.n_leaves() {
                classes.entry(problem.prefix(leaf, t)).or_default().push(leaf);
            }
            classes.into_values().collect()
        })
        .collect()
}

fn check_shape(problem: &DecisionProblem, kernel: &[Vec<Rational>]) -> Result<()> {
    let n = problem.n_leaves();
    if kernel.len() != n || kernel.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("deviation kernel must be {n}x{n}")));
    }
    for (a, row) in kernel.iter().enumerate() {
        check_probability_vector(row, &format!("deviation row `{}`", problem.leaf_label(a)))?;
    }
    Ok(())
}

/// True iff every adaptedness equality holds exactly. Errors on a kernel
/// that is not row-stochastic.
pub fn is_adapted(problem: &DecisionProblem, kernel: &[Vec<Rational>]) -> Result<bool> {
    check_shape(problem, kernel)?;
    for classes in prefix_classes(problem) {
        let mass = |a: LeafId, q: &[LeafId]| -> Rational { q.iter().map(|&b| &kernel[a][b]).sum() };
        for members in classes.iter().filter(|m| m.len() > 1) {
            for q in &classes {
                let first = mass(members[0], q);
                if members[1..].iter().any(|&a| mass(a, q) != first) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

impl DeviationRule {
    /// Validates shape, stochasticity and adaptedness.
    pub fn new(problem: &DecisionProblem, kernel: Vec<Vec<Rational>>) -> Result<Self> {
        if !is_adapted(problem, &kernel)? {
            return Err(Error::validation("deviation rule is not adapted"));
        }
        Ok(DeviationRule { kernel })
    }

    pub fn identity(problem: &DecisionProblem) -> Self {
        let n = problem.n_leaves();
        let kernel = (0..n)
            .map(|a| (0..n).map(|b| if a == b { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        DeviationRule { kernel }
    }

    pub fn kernel(&self) -> &[Vec<Rational>] {
        &self.kernel
    }

    pub fn weight(&self, input: LeafId, output: LeafId) -> &Rational {
        &self.kernel[input][output]
    }

    pub fn row(&self, input: LeafId) -> &[Rational] {
        &self.kernel[input]
    }

    pub fn is_identity(&self) -> bool {
        self.kernel
            .iter()
            .enumerate()
            .all(|(a, row)| row.iter().enumerate().all(|(b, w)| if a == b { w.is_one() } else { w.is_zero() }))
    }

    /// `(outer ∘ inner)(c|a) = Σ_b outer(c|b)·inner(b|a)`.
    pub fn compose(outer: &DeviationRule, inner: &DeviationRule) -> Result<DeviationRule> {
        let n = inner.kernel.len();
        if outer.kernel.len() != n {
            return Err(Error::Shape("composing rules of different problems".into()));
        }
        let kernel = (0..n)
            .map(|a| {
                let mut row = vec![Rational::zero(); n];
                for (b, w) in inner.kernel[a].iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    for (c, v) in outer.kernel[b].iter().enumerate() {
                        if !v.is_zero() {
                            row[c] += w * v;
                        }
                    }
                }
                row
            })
            .collect();
        Ok(DeviationRule { kernel })
    }

    /// `{ "<input>": { "<output>": "p/q" } }`, zero weights omitted.
    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        let mut obj = Map::new();
        for (a, row) in self.kernel.iter().enumerate() {
            let mut inner = Map::new();
            for (b, w) in row.iter().enumerate() {
                if !w.is_zero() {
                    inner.insert(problem.leaf_label(b), Value::String(format_rational(w)));
                }
            }
            obj.insert(problem.leaf_label(a), Value::Object(inner));
        }
        Value::Object(obj)
    }

    /// Accepts the mixed form or the pure form `{ "<input>": "<output>" }`,
    /// and mixtures of the two per row. Every input must appear.
    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("deviation rule must be a JSON object"))?;
        let n = problem.n_leaves();
        let mut kernel: Vec<Option<Vec<Rational>>> = vec![None; n];
        for (input, row) in obj {
            let a = problem.leaf_id(input)?;
            let mut weights = vec![Rational::zero(); n];
            match row {
                Value::String(output) => weights[problem.leaf_id(output)?] = Rational::one(),
                Value::Object(entries) => {
                    for (output, w) in entries {
                        weights[problem.leaf_id(output)?] += json_rational(w)?;
                    }
                }
                other => return Err(Error::parse(format!("deviation row `{input}` has invalid value {other}"))),
            }
            if kernel[a].replace(weights).is_some() {
                return Err(Error::validation(format!("duplicate deviation row for `{input}`")));
            }
        }
        let kernel = kernel
            .into_iter()
            .enumerate()
            .map(|(a, row)| {
                row.ok_or_else(|| Error::validation(format!("deviation rule has no row for `{}`", problem.leaf_label(a))))
            })
            .collect::<Result<Vec<_>>>()?;
        DeviationRule::new(problem, kernel)
    }
}

impl PureDeviationRule {
    pub fn identity(problem: &DecisionProblem) -> Self {
        PureDeviationRule {
            outputs: (0..problem.n_leaves()).collect(),
        }
    }

    /// Validates that the map is adapted.
    pub fn new(problem: &DecisionProblem, outputs: Vec<LeafId>) -> Result<Self> {
        let rule = PureDeviationRule { outputs };
        if rule.outputs.len() != problem.n_leaves() || rule.outputs.iter().any(|&b| b >= problem.n_leaves()) {
            return Err(Error::Shape("pure deviation rule needs one valid output per leaf".into()));
        }
        if !is_adapted(problem, rule.to_rule().kernel())? {
            return Err(Error::validation("pure deviation rule is not adapted"));
        }
        Ok(rule)
    }

    pub fn output(&self, input: LeafId) -> LeafId {
        self.outputs[input]
    }

    pub fn outputs(&self) -> &[LeafId] {
        &self.outputs
    }

    pub fn is_identity(&self) -> bool {
        self.outputs.iter().enumerate().all(|(a, &b)| a == b)
    }

    pub fn to_rule(&self) -> DeviationRule {
        let n = self.outputs.len();
        let kernel = self
            .outputs
            .iter()
            .map(|&b| (0..n).map(|c| if c == b { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        DeviationRule { kernel }
    }

    /// `u(d(a), ω) − u(a, ω)`.
    pub fn improvement(&self, problem: &DecisionProblem, input: LeafId, state: StateId) -> Result<Rational> {
        Ok(problem.utility(self.outputs[input], state)? - problem.utility(input, state)?)
    }

    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        Value::Object(
            self.outputs
                .iter()
                .enumerate()
                .map(|(a, &b)| (problem.leaf_label(a), Value::String(problem.leaf_label(b))))
                .collect(),
        )
    }
}

fn subtree_leaves(tree: &ActionTree, node: NodeId, out: &mut Vec<LeafId>) {
    match tree.node(node).leaf {
        Some(leaf) => out.push(leaf),
        None => {
            for &c in tree.children(node) {
                subtree_leaves(tree, c, out);
            }
        }
    }
}

/// Number of adapted pure rules, computed without enumerating them.
///
/// A pure rule sends each input history `h` to an output history `φ(h)`:
/// children of `h` go to children of `φ(h)`, or stay at `φ(h)` once it is
/// terminal, and a terminal input with a non-terminal image picks any
/// completion. Choices for different children are independent.
pub fn count_pure_rules(problem: &DecisionProblem) -> BigUint {
    let tree = problem.tree();
    let mut leaves_below = vec![BigUint::zero(); tree.len()];
    for id in (0..tree.len()).rev() {
        leaves_below[id] = if tree.is_terminal(id) {
            BigUint::one()
        } else {
            tree.children(id).iter().map(|&c| leaves_below[c].clone()).sum()
        };
    }
    fn count(tree: &ActionTree, leaves_below: &[BigUint], h: NodeId, g: NodeId) -> BigUint {
        match (tree.is_terminal(h), tree.is_terminal(g)) {
            (_, true) => BigUint::one(),
            (true, false) => leaves_below[g].clone(),
            (false, false) => tree
                .children(h)
                .iter()
                .map(|&c| {
                    tree.children(g)
                        .iter()
                        .map(|&x| count(tree, leaves_below, c, x))
                        .sum::<BigUint>()
                })
                .product(),
        }
    }
    count(tree, &leaves_below, ActionTree::ROOT, ActionTree::ROOT)
}

/// All adapted pure rules in lexicographic order of their choices.
///
/// Input histories are visited in preorder. At each one the rule picks the
/// image among the children of the parent's image (forced when that image is
/// terminal); a terminal input with a non-terminal image then picks a
/// completion leaf in tree order.
pub fn enumerate_pure_rules(problem: &DecisionProblem, cap: u64) -> Result<Vec<PureDeviationRule>> {
    let total = count_pure_rules(problem);
    if total > BigUint::from(cap) {
        return Err(Error::SizeGuard {
            count: total.to_string(),
            cap,
        });
    }
    let tree = problem.tree();
    let order: Vec<NodeId> = preorder(tree);
    let mut image = vec![ActionTree::ROOT; tree.len()];
    let mut outputs = vec![0; problem.n_leaves()];
    let mut rules = Vec::with_capacity(total.to_usize().unwrap_or(0));
    descend(tree, &order, 0, &mut image, &mut outputs, &mut rules);
    debug_assert_eq!(BigUint::from(rules.len()), total);
    Ok(rules)
}

fn preorder(tree: &ActionTree) -> Vec<NodeId> {
    fn walk(tree: &ActionTree, id: NodeId, out: &mut Vec<NodeId>) {
        for &c in tree.children(id) {
            out.push(c);
            walk(tree, c, out);
        }
    }
    let mut out = Vec::with_capacity(tree.len());
    walk(tree, ActionTree::ROOT, &mut out);
    out
}

fn descend(
    tree: &ActionTree,
    order: &[NodeId],
    pos: usize,
    image: &mut [NodeId],
    outputs: &mut [LeafId],
    rules: &mut Vec<PureDeviationRule>,
) {
    let Some(&h) = order.get(pos) else {
        rules.push(PureDeviationRule {
            outputs: outputs.to_vec(),
        });
        return;
    };
    let parent_image = image[tree.node(h).parent.expect("non-root")];
    let candidates: Vec<NodeId> = if tree.is_terminal(parent_image) {
        vec![parent_image]
    } else {
        tree.children(parent_image).to_vec()
    };
    for g in candidates {
        image[h] = g;
        match tree.node(h).leaf {
            None => descend(tree, order, pos + 1, image, outputs, rules),
            Some(input) => {
                let mut completions = Vec::new();
                subtree_leaves(tree, g, &mut completions);
                for b in completions {
                    outputs[input] = b;
                    descend(tree, order, pos + 1, image, outputs, rules);
                }
            }
        }
    }
}

/// `Σ_b D(b|a)·u(b, ω) − u(a, ω)`.
pub fn improvement(problem: &DecisionProblem, rule: &DeviationRule, input: LeafId, state: StateId) -> Result<Rational> {
    Ok(problem.lottery_utility(rule.row(input), state)? - problem.utility(input, state)?)
}

fn improvement_table(problem: &DecisionProblem, rule: &DeviationRule) -> Result<Vec<Vec<Rational>>> {
    (0..problem.n_leaves())
        .map(|a| (0..problem.n_states()).map(|s| improvement(problem, rule, a, s)).collect())
        .collect()
}

/// Weak improvement everywhere and strict improvement on `target` in every state.
pub fn dominates_sequence(problem: &DecisionProblem, rule: &DeviationRule, target: LeafId) -> Result<bool> {
    let table = improvement_table(problem, rule)?;
    Ok(table.iter().flatten().all(|v| !v.is_negative()) && table[target].iter().all(Rational::is_positive))
}

/// `Σ_{a,ω} improvement(a, ω)·γ(a, ω) > 0`.
pub fn dominates_joint(problem: &DecisionProblem, rule: &DeviationRule, joint: &JointDistribution) -> Result<bool> {
    Ok(joint_gain(problem, rule, joint)?.is_positive())
}

/// Expected improvement under `joint`.
pub fn joint_gain(problem: &DecisionProblem, rule: &DeviationRule, joint: &JointDistribution) -> Result<Rational> {
    let mut total = Rational::zero();
    for a in 0..problem.n_leaves() {
        for s in 0..problem.n_states() {
            let w = joint.weight(a, s);
            if !w.is_zero() {
                total += improvement(problem, rule, a, s)? * w;
            }
        }
    }
    Ok(total)
}

/// `Σ_a [min_ω improvement(a, ω)]·γ̄(a) > 0`.
pub fn dominates_marginal(problem: &DecisionProblem, rule: &DeviationRule, marginal: &MarginalDistribution) -> Result<bool> {
    Ok(marginal_gain(problem, rule, marginal)?.is_positive())
}

/// Worst-state expected improvement under `marginal`.
pub fn marginal_gain(problem: &DecisionProblem, rule: &DeviationRule, marginal: &MarginalDistribution) -> Result<Rational> {
    let mut total = Rational::zero();
    for a in 0..problem.n_leaves() {
        let w = marginal.weight(a);
        if w.is_zero() {
            continue;
        }
        let worst = (0..problem.n_states())
            .map(|s| improvement(problem, rule, a, s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min()
            .expect("at least one state");
        total += worst * w;
    }
    Ok(total)
}
