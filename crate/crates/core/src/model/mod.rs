//! Decision problems: the action tree, states, and the (possibly
//! parameterized) utility table.
//!
//! The action set is a rooted tree of depth at most `T`. A complete action
//! sequence is a root-to-leaf path padded to length `T` with the reserved
//! marker [`EMPTY_ACTION`], so `(not_invest, ∅)` and `(invest, pull_back)`
//! live in the same sequence space. A product problem `A_1 × … × A_T` is
//! simply a tree with uniform branching.

mod affine;
mod distribution;
mod file;
pub mod rational;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

pub use affine::AffineExpr;
pub use distribution::{JointDistribution, MarginalDistribution};
pub(crate) use distribution::json_rational;
pub use rational::Rational;

use crate::error::{Error, Result};

/// Padding marker for periods after a terminal history.
pub const EMPTY_ACTION: &str = "∅";
/// File spelling of [`EMPTY_ACTION`].
pub const FILE_EMPTY_ACTION: &str = "_";

pub type NodeId = usize;
/// Index of a complete action sequence (a leaf) in [`DecisionProblem::leaves`] order.
pub type LeafId = usize;
pub type StateId = usize;

/// Declarative tree shape used to build problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeSpec {
    Leaf,
    Node(Vec<(String, TreeSpec)>),
}

impl TreeSpec {
    /// Uniform tree with the same action labels in every period.
    pub fn product(periods: &[Vec<String>]) -> TreeSpec {
        match periods.split_first() {
            None => TreeSpec::Leaf,
            Some((first, rest)) => TreeSpec::Node(
                first
                    .iter()
                    .map(|label| (label.clone(), TreeSpec::product(rest)))
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Action taken to reach this node; `None` at the root.
    pub action: Option<String>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: usize,
    /// Leaf index when this history is terminal.
    pub leaf: Option<LeafId>,
}

/// Arena-allocated action tree; node 0 is the empty history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTree {
    nodes: Vec<TreeNode>,
}

impl ActionTree {
    pub const ROOT: NodeId = 0;

    fn build(spec: &TreeSpec) -> Result<(ActionTree, Vec<NodeId>)> {
        let mut tree = ActionTree {
            nodes: vec![TreeNode {
                action: None,
                parent: None,
                children: Vec::new(),
                depth: 0,
                leaf: None,
            }],
        };
        let mut leaves = Vec::new();
        match spec {
            TreeSpec::Leaf => return Err(Error::validation("the root history needs at least one action")),
            TreeSpec::Node(children) => tree.grow(Self::ROOT, children, &mut leaves)?,
        }
        Ok((tree, leaves))
    }

    fn grow(&mut self, parent: NodeId, children: &[(String, TreeSpec)], leaves: &mut Vec<NodeId>) -> Result<()> {
        if children.is_empty() {
            return Err(Error::validation("a non-terminal history has an empty action set"));
        }
        for (i, (label, sub)) in children.iter().enumerate() {
            if label.is_empty() || label == EMPTY_ACTION || label == FILE_EMPTY_ACTION {
                return Err(Error::validation(format!(
                    "action label `{label}` is reserved or empty"
                )));
            }
            if label.contains([',', ':', '@', ';']) || label.trim() != label {
                return Err(Error::validation(format!(
                    "action label `{label}` contains a separator character or surrounding whitespace"
                )));
            }
            if children[..i].iter().any(|(other, _)| other == label) {
                return Err(Error::validation(format!("duplicate action label `{label}`")));
            }
            let id = self.nodes.len();
            self.nodes.push(TreeNode {
                action: Some(label.clone()),
                parent: Some(parent),
                children: Vec::new(),
                depth: self.nodes[parent].depth + 1,
                leaf: None,
            });
            self.nodes[parent].children.push(id);
            match sub {
                TreeSpec::Leaf => {
                    self.nodes[id].leaf = Some(leaves.len());
                    leaves.push(id);
                }
                TreeSpec::Node(grand) => self.grow(id, grand, leaves)?,
            }
        }
        Ok(())
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn is_terminal(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    pub fn child_by_label(&self, id: NodeId, label: &str) -> Option<NodeId> {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .find(|&c| self.nodes[c].action.as_deref() == Some(label))
    }

    /// Ancestor of `id` at `depth`, or `id` itself when it is shallower.
    pub fn ancestor_at(&self, mut id: NodeId, depth: usize) -> NodeId {
        while self.nodes[id].depth > depth {
            id = self.nodes[id].parent.expect("non-root node has a parent");
        }
        id
    }

    /// Action labels along the path from the root to `id`.
    pub fn path(&self, mut id: NodeId) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.nodes[id].depth);
        while let Some(action) = &self.nodes[id].action {
            labels.push(action.clone());
            id = self.nodes[id].parent.expect("labelled node has a parent");
        }
        labels.reverse();
        labels
    }

    fn to_spec(&self, id: NodeId) -> TreeSpec {
        if self.is_terminal(id) {
            TreeSpec::Leaf
        } else {
            TreeSpec::Node(
                self.children(id)
                    .iter()
                    .map(|&c| (self.nodes[c].action.clone().unwrap_or_default(), self.to_spec(c)))
                    .collect(),
            )
        }
    }
}

/// A complete action sequence padded to length `T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSequence {
    pub entries: Vec<String>,
}

impl ActionSequence {
    /// The non-padded prefix, joined by commas (the file leaf-id form).
    pub fn leaf_id(&self) -> String {
        self.entries
            .iter()
            .filter(|e| e.as_str() != EMPTY_ACTION)
            .cloned()
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.entries.join(", "))
    }
}

/// Utility table evaluated to exact numbers, indexed `[leaf][state]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payoffs {
    values: Vec<Vec<Rational>>,
}

impl Payoffs {
    pub fn get(&self, leaf: LeafId, state: StateId) -> &Rational {
        &self.values[leaf][state]
    }

    pub fn row(&self, leaf: LeafId) -> &[Rational] {
        &self.values[leaf]
    }

    pub fn n_leaves(&self) -> usize {
        self.values.len()
    }

    pub fn n_states(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// A finite dynamic decision problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionProblem {
    periods: usize,
    states: Vec<String>,
    params: Vec<String>,
    tree: ActionTree,
    leaves: Vec<NodeId>,
    utility: Vec<Vec<AffineExpr>>,
    /// `prefixes[leaf][t]` is the history node identifying the padded
    /// length-`t` prefix of `leaf`.
    prefixes: Vec<Vec<NodeId>>,
    payoffs: Option<Payoffs>,
}

impl DecisionProblem {
    /// Builds and validates a problem. `utility` is indexed `[leaf][state]`
    /// with leaves in depth-first order of `tree`.
    pub fn new(
        periods: usize,
        states: Vec<String>,
        params: Vec<String>,
        tree: &TreeSpec,
        utility: Vec<Vec<AffineExpr>>,
    ) -> Result<Self> {
        if periods == 0 {
            return Err(Error::validation("periods must be positive"));
        }
        if states.is_empty() {
            return Err(Error::validation("at least one state is required"));
        }
        check_distinct(&states, "state")?;
        check_distinct(&params, "parameter")?;
        let (tree, leaves) = ActionTree::build(tree)?;
        for &leaf in &leaves {
            let depth = tree.node(leaf).depth;
            if depth > periods {
                return Err(Error::validation(format!(
                    "history {} has depth {depth} > {periods} periods",
                    tree.path(leaf).join(",")
                )));
            }
        }
        if utility.len() != leaves.len() {
            return Err(Error::validation(format!(
                "utility table has {} rows for {} action sequences",
                utility.len(),
                leaves.len()
            )));
        }
        for (row, &leaf) in utility.iter().zip(&leaves) {
            if row.len() != states.len() {
                return Err(Error::validation(format!(
                    "utility row for {} has {} entries for {} states",
                    tree.path(leaf).join(","),
                    row.len(),
                    states.len()
                )));
            }
            if row.iter().any(|e| e.coefficients.len() != params.len()) {
                return Err(Error::validation("utility entry has the wrong number of coefficients"));
            }
        }
        let prefixes = leaves
            .iter()
            .map(|&leaf| (0..=periods).map(|t| tree.ancestor_at(leaf, t)).collect())
            .collect();
        let payoffs = params.is_empty().then(|| Payoffs {
            values: utility
                .iter()
                .map(|row| row.iter().map(|e| e.constant.clone()).collect())
                .collect(),
        });
        Ok(DecisionProblem {
            periods,
            states,
            params,
            tree,
            leaves,
            utility,
            prefixes,
            payoffs,
        })
    }

    /// Parameter-free problem from a numeric table indexed `[leaf][state]`.
    pub fn with_payoffs(
        periods: usize,
        states: Vec<String>,
        tree: &TreeSpec,
        table: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let utility = table
            .into_iter()
            .map(|row| row.into_iter().map(|v| AffineExpr::constant(v, 0)).collect())
            .collect();
        DecisionProblem::new(periods, states, Vec::new(), tree, utility)
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn tree(&self) -> &ActionTree {
        &self.tree
    }

    pub fn tree_spec(&self) -> TreeSpec {
        self.tree.to_spec(ActionTree::ROOT)
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn leaf_node(&self, leaf: LeafId) -> NodeId {
        self.leaves[leaf]
    }

    /// Padded length-`t` prefix of `leaf`, as a history node.
    pub fn prefix(&self, leaf: LeafId, t: usize) -> NodeId {
        self.prefixes[leaf][t]
    }

    pub fn utility_expr(&self, leaf: LeafId, state: StateId) -> &AffineExpr {
        &self.utility[leaf][state]
    }

    pub fn utility_table(&self) -> &[Vec<AffineExpr>] {
        &self.utility
    }

    /// The padded leaf set `A`, in leaf order.
    pub fn sequences(&self) -> Vec<ActionSequence> {
        (0..self.n_leaves()).map(|l| self.sequence(l)).collect()
    }

    pub fn sequence(&self, leaf: LeafId) -> ActionSequence {
        let mut entries = self.tree.path(self.leaves[leaf]);
        entries.resize(self.periods, EMPTY_ACTION.to_string());
        ActionSequence { entries }
    }

    /// Unpadded comma-joined label, e.g. `invest,pull_back`.
    pub fn leaf_label(&self, leaf: LeafId) -> String {
        self.tree.path(self.leaves[leaf]).join(",")
    }

    /// Resolves a leaf id such as `w,x` (trailing `_`/`∅` padding allowed).
    pub fn leaf_id(&self, label: &str) -> Result<LeafId> {
        let mut parts: Vec<&str> = label.split(',').map(str::trim).collect();
        while parts.len() > 1
            && matches!(parts.last(), Some(&p) if p == FILE_EMPTY_ACTION || p == EMPTY_ACTION)
        {
            parts.pop();
        }
        let mut node = ActionTree::ROOT;
        for part in &parts {
            node = self
                .tree
                .child_by_label(node, part)
                .ok_or_else(|| Error::UnknownLeaf(label.to_string()))?;
        }
        self.tree
            .node(node)
            .leaf
            .ok_or_else(|| Error::UnknownLeaf(label.to_string()))
    }

    pub fn leaf_of(&self, seq: &ActionSequence) -> Result<LeafId> {
        self.leaf_id(&seq.entries.join(","))
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn is_parameter_free(&self) -> bool {
        self.params.is_empty()
    }

    /// Numeric utility table; fails for parameterized problems.
    pub fn payoffs(&self) -> Result<&Payoffs> {
        self.payoffs
            .as_ref()
            .ok_or_else(|| Error::Parameterized(self.params.clone()))
    }

    /// Exact lookup of `u(a, ω)`.
    pub fn utility(&self, leaf: LeafId, state: StateId) -> Result<Rational> {
        let payoffs = self.payoffs()?;
        if leaf >= self.n_leaves() {
            return Err(Error::UnknownLeaf(format!("#{leaf}")));
        }
        if state >= self.n_states() {
            return Err(Error::UnknownState(format!("#{state}")));
        }
        Ok(payoffs.get(leaf, state).clone())
    }

    /// Expected utility `Σ_a α(a) u(a, ω)` of a lottery over leaves.
    pub fn lottery_utility(&self, lottery: &[Rational], state: StateId) -> Result<Rational> {
        let payoffs = self.payoffs()?;
        if lottery.len() != self.n_leaves() {
            return Err(Error::Shape(format!(
                "lottery has {} weights for {} action sequences",
                lottery.len(),
                self.n_leaves()
            )));
        }
        if state >= self.n_states() {
            return Err(Error::UnknownState(format!("#{state}")));
        }
        rational::check_probability_vector(lottery, "lottery")?;
        Ok(lottery
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(leaf, w)| w * payoffs.get(leaf, state))
            .sum())
    }

    /// Evaluates every utility entry at `point`, yielding a parameter-free problem.
    pub fn instantiate(&self, point: &BTreeMap<String, Rational>) -> Result<DecisionProblem> {
        if let Some(unknown) = point.keys().find(|k| !self.params.contains(k)) {
            return Err(Error::validation(format!("unknown parameter `{unknown}`")));
        }
        let values = self
            .params
            .iter()
            .map(|p| {
                point
                    .get(p)
                    .cloned()
                    .ok_or_else(|| Error::validation(format!("missing value for parameter `{p}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = self
            .utility
            .iter()
            .map(|row| row.iter().map(|e| e.eval(&values)).collect())
            .collect();
        DecisionProblem::with_payoffs(self.periods, self.states.clone(), &self.tree_spec(), table)
    }

    /// Applies `f` entry-wise to a parameter-free problem's utilities.
    pub fn map_payoffs(&self, mut f: impl FnMut(&Rational) -> Rational) -> Result<DecisionProblem> {
        let payoffs = self.payoffs()?;
        let table = payoffs
            .values
            .iter()
            .map(|row| row.iter().map(&mut f).collect())
            .collect();
        DecisionProblem::with_payoffs(self.periods, self.states.clone(), &self.tree_spec(), table)
    }
}

fn check_distinct(names: &[String], what: &str) -> Result<()> {
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::validation(format!("empty {what} name")));
        }
        if names[..i].contains(name) {
            return Err(Error::validation(format!("duplicate {what} `{name}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::rational::{int, ratio};
    use super::*;

    pub(crate) fn example1() -> DecisionProblem {
        let tree = TreeSpec::Node(vec![
            ("not_invest".into(), TreeSpec::Leaf),
            (
                "invest".into(),
                TreeSpec::Node(vec![
                    ("pull_back".into(), TreeSpec::Leaf),
                    ("invest".into(), TreeSpec::Leaf),
                ]),
            ),
        ]);
        DecisionProblem::with_payoffs(
            2,
            vec!["good".into(), "bad".into()],
            &tree,
            vec![
                vec![int(0), int(0)],
                vec![int(-1), int(-1)],
                vec![int(2), int(-2)],
            ],
        )
        .unwrap()
    }

    /// Leaves in order x, y, w·x, w·y; states X, Y.
    pub(crate) fn example2(delta: Rational) -> DecisionProblem {
        let tree = TreeSpec::Node(vec![
            ("x".into(), TreeSpec::Leaf),
            ("y".into(), TreeSpec::Leaf),
            (
                "w".into(),
                TreeSpec::Node(vec![("x".into(), TreeSpec::Leaf), ("y".into(), TreeSpec::Leaf)]),
            ),
        ]);
        DecisionProblem::with_payoffs(
            2,
            vec!["X".into(), "Y".into()],
            &tree,
            vec![
                vec![int(5), int(3)],
                vec![int(3), int(5)],
                vec![int(5) * &delta, int(3) * &delta],
                vec![int(3) * &delta, int(5) * &delta],
            ],
        )
        .unwrap()
    }

    #[test]
    fn padded_sequences_and_prefixes() {
        let p = example1();
        assert_eq!(p.n_leaves(), 3);
        assert_eq!(p.sequence(0).entries, vec!["not_invest", EMPTY_ACTION]);
        assert_eq!(p.leaf_id("not_invest,_").unwrap(), 0);
        assert_eq!(p.leaf_id("invest,invest").unwrap(), 2);
        assert!(matches!(p.leaf_id("invest"), Err(Error::UnknownLeaf(_))));
        assert!(matches!(p.leaf_id("invest,stop"), Err(Error::UnknownLeaf(_))));
        assert_eq!(p.prefix(1, 1), p.prefix(2, 1));
        assert_ne!(p.prefix(1, 2), p.prefix(2, 2));
        assert_eq!(p.prefix(0, 2), p.leaf_node(0));
        for l in 0..3 {
            assert_eq!(p.leaf_of(&p.sequence(l)).unwrap(), l);
        }
    }

    #[test]
    fn utility_and_lotteries() {
        let p = example1();
        assert_eq!(p.utility(2, 0).unwrap(), int(2));
        assert_eq!(p.utility(0, 1).unwrap(), int(0));
        let third = vec![ratio(1, 3); 3];
        assert_eq!(p.lottery_utility(&third, 0).unwrap(), ratio(1, 3));
        let bad = vec![ratio(1, 2); 3];
        assert!(matches!(p.lottery_utility(&bad, 0), Err(Error::InvalidWeights(_))));
        let point = vec![int(0), int(0), int(1)];
        assert_eq!(p.lottery_utility(&point, 1).unwrap(), p.utility(2, 1).unwrap());
    }

    #[test]
    fn validation_errors() {
        let tree = TreeSpec::Node(vec![("a".into(), TreeSpec::Leaf), ("a".into(), TreeSpec::Leaf)]);
        let e = DecisionProblem::with_payoffs(1, vec!["s".into()], &tree, vec![vec![int(0)]; 2]);
        assert!(matches!(e, Err(Error::Validation(_))));

        let deep = TreeSpec::Node(vec![("a".into(), TreeSpec::Node(vec![("b".into(), TreeSpec::Leaf)]))]);
        let e = DecisionProblem::with_payoffs(1, vec!["s".into()], &deep, vec![vec![int(0)]]);
        assert!(matches!(e, Err(Error::Validation(_))));

        let reserved = TreeSpec::Node(vec![("_".into(), TreeSpec::Leaf)]);
        let e = DecisionProblem::with_payoffs(1, vec!["s".into()], &reserved, vec![vec![int(0)]]);
        assert!(matches!(e, Err(Error::Validation(_))));

        let flat = TreeSpec::Node(vec![("a".into(), TreeSpec::Leaf)]);
        let e = DecisionProblem::with_payoffs(1, vec!["s".into(), "t".into()], &flat, vec![vec![int(0)]]);
        assert!(matches!(e, Err(Error::Validation(_))));
    }

    #[test]
    fn parameterized_problems_require_instantiation() {
        let tree = TreeSpec::Node(vec![("a".into(), TreeSpec::Leaf)]);
        let params = vec!["k".to_string()];
        let e = AffineExpr::parse("2 + 3*k", &params).unwrap();
        let p = DecisionProblem::new(1, vec!["s".into()], params, &tree, vec![vec![e]]).unwrap();
        assert!(matches!(p.utility(0, 0), Err(Error::Parameterized(_))));
        let point = BTreeMap::from([("k".to_string(), ratio(1, 3))]);
        let q = p.instantiate(&point).unwrap();
        assert_eq!(q.utility(0, 0).unwrap(), int(3));
        assert!(p.instantiate(&BTreeMap::new()).is_err());
        let extra = BTreeMap::from([("k".to_string(), int(1)), ("z".to_string(), int(1))]);
        assert!(p.instantiate(&extra).is_err());
    }

    #[test]
    fn product_tree_has_all_sequences() {
        let labels = vec![vec!["a".to_string(), "b".to_string()], vec!["c".into(), "d".into(), "e".into()]];
        let spec = TreeSpec::product(&labels);
        let p = DecisionProblem::with_payoffs(2, vec!["s".into()], &spec, vec![vec![int(0)]; 6]).unwrap();
        assert_eq!(p.n_leaves(), 6);
        let seqs = p.sequences();
        let mut dedup = seqs.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 6);
    }
}
