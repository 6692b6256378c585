//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dynrat::deviation::count_pure_rules;
use dynrat::model::rational::Rational;
use dynrat::model::{DecisionProblem, JointDistribution, MarginalDistribution, TreeSpec};
use dynrat::oracle::{strategy_value, InformationStructure, Strategy};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Utility with denominator at most 20.
pub fn random_utility(rng: &mut ChaCha8Rng) -> Rational {
    q(rng.gen_range(-20..=20), rng.gen_range(1..=20))
}

fn random_tree(rng: &mut ChaCha8Rng, depth: usize, periods: usize) -> TreeSpec {
    if depth == periods || (depth > 0 && rng.gen_bool(0.25)) {
        return TreeSpec::Leaf;
    }
    let lo = if depth == 0 { 2 } else { 1 };
    let k = rng.gen_range(lo..=3);
    TreeSpec::Node(
        (0..k)
            .map(|i| (format!("a{i}"), random_tree(rng, depth + 1, periods)))
            .collect(),
    )
}

fn tree_depth(tree: &TreeSpec) -> usize {
    match tree {
        TreeSpec::Leaf => 0,
        TreeSpec::Node(children) => 1 + children.iter().map(|(_, c)| tree_depth(c)).max().unwrap_or(0),
    }
}

fn count_leaves(tree: &TreeSpec) -> usize {
    match tree {
        TreeSpec::Leaf => 1,
        TreeSpec::Node(children) => children.iter().map(|(_, c)| count_leaves(c)).sum(),
    }
}

/// Problem with `T ≤ max_periods`, at most three actions per history and
/// three states, and at most `max_rules` adapted pure deviation rules.
pub fn random_problem(rng: &mut ChaCha8Rng, max_periods: usize, max_rules: u64) -> DecisionProblem {
    loop {
        let periods = rng.gen_range(1..=max_periods);
        let tree = random_tree(rng, 0, periods);
        let periods = tree_depth(&tree);
        let n_states = rng.gen_range(1..=3);
        let states: Vec<String> = (0..n_states).map(|s| format!("w{s}")).collect();
        let table = (0..count_leaves(&tree))
            .map(|_| (0..n_states).map(|_| random_utility(rng)).collect())
            .collect();
        let p = DecisionProblem::with_payoffs(periods, states, &tree, table).expect("valid random problem");
        if count_pure_rules(&p) <= BigUint::from(max_rules) {
            return p;
        }
    }
}

/// Probability vector of length `n` with small random denominators.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<Rational> {
    let raw: Vec<i64> = (0..n)
        .map(|_| if sparse && rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..=6) })
        .collect();
    let total: i64 = raw.iter().sum();
    if total == 0 {
        let mut v = vec![Rational::zero(); n];
        v[rng.gen_range(0..n)] = Rational::one();
        return v;
    }
    raw.into_iter().map(|x| q(x, total)).collect()
}

pub fn random_joint(rng: &mut ChaCha8Rng, p: &DecisionProblem) -> JointDistribution {
    let flat = random_simplex(rng, p.n_leaves() * p.n_states(), true);
    let weights = flat.chunks(p.n_states()).map(<[Rational]>::to_vec).collect();
    JointDistribution::new(p, weights).unwrap()
}

pub fn random_marginal(rng: &mut ChaCha8Rng, p: &DecisionProblem) -> MarginalDistribution {
    MarginalDistribution::new(p, random_simplex(rng, p.n_leaves(), true)).unwrap()
}

/// Product-signal structure with one to `max_signals` signals per period.
pub fn random_information(rng: &mut ChaCha8Rng, p: &DecisionProblem, max_signals: usize) -> InformationStructure {
    let signals: Vec<Vec<String>> = (0..p.periods())
        .map(|t| (0..rng.gen_range(1..=max_signals)).map(|i| format!("s{t}{i}")).collect())
        .collect();
    let n_seq: usize = signals.iter().map(Vec::len).product();
    let prior = random_simplex(rng, p.n_states(), false);
    let kernel = (0..p.n_states()).map(|_| random_simplex(rng, n_seq, true)).collect();
    InformationStructure::product(p, signals, prior, kernel).unwrap()
}

/// Best value over every adapted pure strategy, by exhaustive search.
pub fn exhaustive_pure_value(p: &DecisionProblem, info: &InformationStructure) -> Rational {
    let (n_seq, n_leaves) = (info.sequences().len(), p.n_leaves());
    let mut choice = vec![0usize; n_seq];
    let mut best: Option<Rational> = None;
    loop {
        let kernel = choice
            .iter()
            .map(|&a| {
                let mut row = vec![Rational::zero(); n_leaves];
                row[a] = Rational::one();
                row
            })
            .collect();
        if let Ok(s) = Strategy::new(p, info, kernel) {
            let v = strategy_value(p, &s, info).unwrap();
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        let mut i = 0;
        loop {
            if i == n_seq {
                return best.expect("some pure strategy is adapted");
            }
            choice[i] += 1;
            if choice[i] < n_leaves {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Increasing convex piecewise-linear data: breakpoints, slopes, anchor.
pub fn random_convex(rng: &mut ChaCha8Rng) -> (Vec<Rational>, Vec<Rational>, Rational) {
    let k = rng.gen_range(0..=3);
    let mut points: Vec<Rational> = (0..k).map(|_| random_utility(rng)).collect();
    points.sort();
    points.dedup();
    let mut slopes = vec![q(rng.gen_range(1..=4), rng.gen_range(1..=4))];
    for _ in 0..points.len() {
        let last = slopes.last().unwrap().clone();
        slopes.push(last + q(rng.gen_range(0..=4), rng.gen_range(1..=4)));
    }
    (points, slopes, random_utility(rng))
}
