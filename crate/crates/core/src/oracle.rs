//! Independent verification: information structures and strategies as
//! explicit values, exact expected utility, backward induction, brute-force
//! obedience checks and seeded simulation.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::deviation::{dominates_joint, dominates_marginal, dominates_sequence, enumerate_pure_rules};
use crate::error::{Error, Result};
use crate::model::rational::{check_probability_vector, Rational};
use crate::model::{
    json_rational, ActionTree, DecisionProblem, JointDistribution, LeafId, NodeId, EMPTY_ACTION, FILE_EMPTY_ACTION,
};
use crate::rationalize::{ObedientTriple, Observation, Verdict, Witness};

/// Prior plus a kernel from states to complete signal sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationStructure {
    /// Signal labels available in each period.
    signals: Vec<Vec<String>>,
    /// Signal sequences that carry the kernel, each of length `T`.
    sequences: Vec<Vec<String>>,
    prior: Vec<Rational>,
    /// `π(s|ω)` indexed `[state][sequence]`.
    kernel: Vec<Vec<Rational>>,
}

/// Adapted kernel `σ(a|s)` indexed `[sequence][leaf]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    kernel: Vec<Vec<Rational>>,
}

impl InformationStructure {
    pub fn new(
        problem: &DecisionProblem,
        signals: Vec<Vec<String>>,
        sequences: Vec<Vec<String>>,
        prior: Vec<Rational>,
        kernel: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let periods = problem.periods();
        if signals.len() != periods {
            return Err(Error::Shape(format!("information structure needs {periods} signal sets")));
        }
        for (t, set) in signals.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::validation(format!("period {} has no signals", t + 1)));
            }
            for (i, s) in set.iter().enumerate() {
                if s.contains(',') || set[..i].contains(s) {
                    return Err(Error::validation(format!("signal `{s}` is repeated or contains a comma")));
                }
            }
        }
        for (i, seq) in sequences.iter().enumerate() {
            if seq.len() != periods || seq.iter().zip(&signals).any(|(s, set)| !set.contains(s)) {
                return Err(Error::validation(format!("signal sequence `{}` is not in the signal sets", seq.join(","))));
            }
            if sequences[..i].contains(seq) {
                return Err(Error::validation(format!("signal sequence `{}` listed twice", seq.join(","))));
            }
        }
        if prior.len() != problem.n_states()
            || kernel.len() != problem.n_states()
            || kernel.iter().any(|r| r.len() != sequences.len())
        {
            return Err(Error::Shape("prior or signal kernel does not match the problem".into()));
        }
        check_probability_vector(&prior, "prior")?;
        for (s, row) in kernel.iter().enumerate() {
            check_probability_vector(row, &format!("signal distribution in state `{}`", problem.states()[s]))?;
        }
        Ok(InformationStructure {
            signals,
            sequences,
            prior,
            kernel,
        })
    }

    /// Every combination of the per-period signal sets, in lexicographic order.
    pub fn product(
        problem: &DecisionProblem,
        signals: Vec<Vec<String>>,
        prior: Vec<Rational>,
        kernel: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let sequences = product_sequences(&signals);
        InformationStructure::new(problem, signals, sequences, prior, kernel)
    }

    /// Signals are the recommended sequences themselves (sequence `i` is leaf `i`).
    pub fn from_triple(problem: &DecisionProblem, triple: &ObedientTriple) -> Result<Self> {
        let sequences: Vec<Vec<String>> = problem.sequences().into_iter().map(|s| s.entries).collect();
        let mut signals: Vec<Vec<String>> = vec![Vec::new(); problem.periods()];
        for seq in &sequences {
            for (t, s) in seq.iter().enumerate() {
                if !signals[t].contains(s) {
                    signals[t].push(s.clone());
                }
            }
        }
        InformationStructure::new(problem, signals, sequences, triple.prior.clone(), triple.recommendation.clone())
    }

    /// `{ "signals": [[..], ..], "prior": {state: p}, "kernel": {state: {"s1,s2": p}} }`.
    /// The carried sequences are the full product of the signal sets.
    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        let signals: Vec<Vec<String>> = value
            .get("signals")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse("information structure needs `signals`: an array of label arrays"))?
            .iter()
            .map(|set| {
                set.as_array()
                    .ok_or_else(|| Error::parse("each signal set must be an array of strings"))?
                    .iter()
                    .map(|s| {
                        s.as_str()
                            .map(normalize_signal)
                            .ok_or_else(|| Error::parse("signal labels must be strings"))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut prior = vec![Rational::zero(); problem.n_states()];
        for (state, w) in value
            .get("prior")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::parse("information structure needs a `prior` object"))?
        {
            prior[problem.state_id(state)?] = json_rational(w)?;
        }
        let sequences = product_sequences(&signals);
        let mut kernel = vec![vec![Rational::zero(); sequences.len()]; problem.n_states()];
        for (state, row) in value
            .get("kernel")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::parse("information structure needs a `kernel` object"))?
        {
            let s = problem.state_id(state)?;
            for (seq, w) in row
                .as_object()
                .ok_or_else(|| Error::parse(format!("kernel row `{state}` must be an object")))?
            {
                let labels: Vec<String> = seq.split(',').map(|x| normalize_signal(x.trim())).collect();
                let idx = sequences
                    .iter()
                    .position(|q| *q == labels)
                    .ok_or_else(|| Error::validation(format!("unknown signal sequence `{seq}`")))?;
                kernel[s][idx] = json_rational(w)?;
            }
        }
        InformationStructure::new(problem, signals, sequences, prior, kernel)
    }

    pub fn sequences(&self) -> &[Vec<String>] {
        &self.sequences
    }

    pub fn prior(&self) -> &[Rational] {
        &self.prior
    }

    pub fn kernel(&self) -> &[Vec<Rational>] {
        &self.kernel
    }

    fn sequence_index(&self, label: &str) -> Result<usize> {
        let labels: Vec<String> = label.split(',').map(|x| normalize_signal(x.trim())).collect();
        self.sequences
            .iter()
            .position(|q| *q == labels)
            .ok_or_else(|| Error::validation(format!("unknown signal sequence `{label}`")))
    }

    /// Sequences grouped by their length-`t` prefix.
    fn prefix_classes(&self, t: usize) -> Vec<Vec<usize>> {
        let mut classes: BTreeMap<&[String], Vec<usize>> = BTreeMap::new();
        for (i, seq) in self.sequences.iter().enumerate() {
            classes.entry(&seq[..t]).or_default().push(i);
        }
        classes.into_values().collect()
    }
}

fn product_sequences(signals: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut sequences: Vec<Vec<String>> = vec![Vec::new()];
    for set in signals {
        sequences = sequences
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |s| {
                    let mut next = prefix.clone();
                    next.push(s.clone());
                    next
                })
            })
            .collect();
    }
    sequences
}

fn normalize_signal(s: &str) -> String {
    if s == FILE_EMPTY_ACTION {
        EMPTY_ACTION.to_string()
    } else {
        s.to_string()
    }
}

impl Strategy {
    /// Validates stochasticity and adaptedness against `info`.
    pub fn new(problem: &DecisionProblem, info: &InformationStructure, kernel: Vec<Vec<Rational>>) -> Result<Self> {
        if kernel.len() != info.sequences.len() || kernel.iter().any(|r| r.len() != problem.n_leaves()) {
            return Err(Error::Shape("strategy does not match the problem and signal sequences".into()));
        }
        for (i, row) in kernel.iter().enumerate() {
            check_probability_vector(row, &format!("strategy row `{}`", info.sequences[i].join(",")))?;
        }
        for t in 1..problem.periods() {
            let mut outputs: BTreeMap<NodeId, Vec<LeafId>> = BTreeMap::new();
            for leaf in 0..problem.n_leaves() {
                outputs.entry(problem.prefix(leaf, t)).or_default().push(leaf);
            }
            for class in info.prefix_classes(t).iter().filter(|c| c.len() > 1) {
                for q in outputs.values() {
                    let mass = |i: usize| -> Rational { q.iter().map(|&b| &kernel[i][b]).sum() };
                    let first = mass(class[0]);
                    if class[1..].iter().any(|&i| mass(i) != first) {
                        return Err(Error::validation(format!(
                            "strategy is not adapted: period-{t} play depends on later signals"
                        )));
                    }
                }
            }
        }
        Ok(Strategy { kernel })
    }

    /// Follow the recommendation; requires `info` built by [`InformationStructure::from_triple`].
    pub fn obedient(problem: &DecisionProblem) -> Self {
        let n = problem.n_leaves();
        Strategy {
            kernel: (0..n)
                .map(|i| (0..n).map(|a| if a == i { Rational::one() } else { Rational::zero() }).collect())
                .collect(),
        }
    }

    pub fn kernel(&self) -> &[Vec<Rational>] {
        &self.kernel
    }

    /// `{ "s1,s2": { "<leaf>": "p/q" } | "<leaf>" }`; every sequence needs a row.
    pub fn from_json(problem: &DecisionProblem, info: &InformationStructure, value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("strategy must be a JSON object"))?;
        let mut kernel: Vec<Option<Vec<Rational>>> = vec![None; info.sequences.len()];
        for (seq, row) in obj {
            let i = info.sequence_index(seq)?;
            let mut weights = vec![Rational::zero(); problem.n_leaves()];
            match row {
                Value::String(leaf) => weights[problem.leaf_id(leaf)?] = Rational::one(),
                Value::Object(entries) => {
                    for (leaf, w) in entries {
                        weights[problem.leaf_id(leaf)?] += json_rational(w)?;
                    }
                }
                other => return Err(Error::parse(format!("strategy row `{seq}` has invalid value {other}"))),
            }
            kernel[i] = Some(weights);
        }
        let kernel = kernel
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.ok_or_else(|| Error::validation(format!("strategy has no row for `{}`", info.sequences[i].join(","))))
            })
            .collect::<Result<Vec<_>>>()?;
        Strategy::new(problem, info, kernel)
    }
}

/// `U(σ, π, p) = Σ_ω p(ω) Σ_s π(s|ω) Σ_a σ(a|s)·u(a, ω)`.
pub fn strategy_value(problem: &DecisionProblem, strategy: &Strategy, info: &InformationStructure) -> Result<Rational> {
    let payoffs = problem.payoffs()?;
    if strategy.kernel.len() != info.sequences.len() || info.prior.len() != problem.n_states() {
        return Err(Error::Shape("strategy, information structure and problem disagree".into()));
    }
    let mut total = Rational::zero();
    for (w, (p, row)) in info.prior.iter().zip(&info.kernel).enumerate() {
        if p.is_zero() {
            continue;
        }
        for (s, pi) in row.iter().enumerate() {
            if pi.is_zero() {
                continue;
            }
            let inner: Rational = strategy.kernel[s]
                .iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(a, x)| x * payoffs.get(a, w))
                .sum();
            total += p * pi * inner;
        }
    }
    Ok(total)
}

/// Prefix trie over the carried signal sequences.
struct SignalTrie {
    children: Vec<Vec<usize>>,
    label: Vec<String>,
    /// Sequence index at depth-`T` nodes.
    sequence: Vec<Option<usize>>,
}

impl SignalTrie {
    fn build(info: &InformationStructure) -> Self {
        let mut children = vec![Vec::new()];
        let mut label = vec![String::new()];
        let mut sequence = vec![None];
        let mut index: HashMap<(usize, &str), usize> = HashMap::new();
        for (i, seq) in info.sequences.iter().enumerate() {
            let mut node = 0;
            for s in seq {
                node = *index.entry((node, s.as_str())).or_insert_with(|| {
                    children.push(Vec::new());
                    label.push(s.clone());
                    sequence.push(None);
                    let id = children.len() - 1;
                    children[node].push(id);
                    id
                });
            }
            sequence[node] = Some(i);
        }
        SignalTrie {
            children,
            label,
            sequence,
        }
    }
}

/// Backward induction over (signal prefix, action history) pairs with
/// unnormalized weights `p(ω)·π(s|ω)`.
struct Dp<'a> {
    problem: &'a DecisionProblem,
    info: &'a InformationStructure,
    trie: SignalTrie,
    memo: HashMap<(usize, NodeId), Rational>,
}

impl<'a> Dp<'a> {
    fn new(problem: &'a DecisionProblem, info: &'a InformationStructure) -> Result<Self> {
        problem.payoffs()?;
        if info.signals.len() != problem.periods() || info.prior.len() != problem.n_states() {
            return Err(Error::Shape("information structure does not match the problem".into()));
        }
        Ok(Dp {
            problem,
            info,
            trie: SignalTrie::build(info),
            memo: HashMap::new(),
        })
    }

    fn moves(&self, h: NodeId) -> Vec<NodeId> {
        let tree = self.problem.tree();
        if tree.is_terminal(h) {
            vec![h]
        } else {
            tree.children(h).to_vec()
        }
    }

    fn value(&mut self, tau: usize, h: NodeId) -> Rational {
        if let Some(v) = self.memo.get(&(tau, h)) {
            return v.clone();
        }
        let v = match self.trie.sequence[tau] {
            Some(seq) => {
                let leaf = self.problem.tree().node(h).leaf.expect("complete history is a leaf");
                let payoffs = self.problem.payoffs().expect("checked");
                (0..self.problem.n_states())
                    .map(|w| &self.info.prior[w] * &self.info.kernel[w][seq] * payoffs.get(leaf, w))
                    .sum()
            }
            None => {
                let mut total = Rational::zero();
                for next in self.trie.children[tau].clone() {
                    total += self.best(next, h).1;
                }
                total
            }
        };
        self.memo.insert((tau, h), v.clone());
        v
    }

    /// Best move at history `h` after the signal prefix `tau`; ties go to the first.
    fn best(&mut self, tau: usize, h: NodeId) -> (NodeId, Rational) {
        let mut best: Option<(NodeId, Rational)> = None;
        for c in self.moves(h) {
            let v = self.value(tau, c);
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((c, v));
            }
        }
        best.expect("every history has a move")
    }
}

/// Highest `U(σ, π, p)` over adapted strategies.
pub fn optimal_value_dp(problem: &DecisionProblem, info: &InformationStructure) -> Result<Rational> {
    let mut dp = Dp::new(problem, info)?;
    Ok(dp.value(0, ActionTree::ROOT))
}

/// A pure strategy attaining [`optimal_value_dp`].
pub fn optimal_strategy_dp(problem: &DecisionProblem, info: &InformationStructure) -> Result<Strategy> {
    let mut dp = Dp::new(problem, info)?;
    let n = problem.n_leaves();
    let mut kernel = vec![vec![Rational::zero(); n]; info.sequences.len()];
    for (i, seq) in info.sequences.iter().enumerate() {
        let (mut tau, mut h) = (0, ActionTree::ROOT);
        for s in seq {
            tau = *dp.trie.children[tau]
                .iter()
                .find(|&&c| dp.trie.label[c] == *s)
                .expect("sequence is in the trie");
            h = dp.best(tau, h).0;
        }
        kernel[i][problem.tree().node(h).leaf.expect("complete history is a leaf")] = Rational::one();
    }
    Strategy::new(problem, info, kernel)
}

/// True iff obeying the recommendations is optimal for the triple.
pub fn verify_obedient_optimality(problem: &DecisionProblem, triple: &ObedientTriple) -> Result<bool> {
    let info = InformationStructure::from_triple(problem, triple)?;
    let obey = strategy_value(problem, &Strategy::obedient(problem), &info)?;
    Ok(obey == optimal_value_dp(problem, &info)?)
}

/// Checks `Σ [u(a, ω) − u(d(a), ω)]·γ(a, ω) ≥ 0` against every pure rule `d`.
pub fn brute_force_rationalizable_joint(problem: &DecisionProblem, joint: &JointDistribution, cap: u64) -> Result<bool> {
    let payoffs = problem.payoffs()?;
    for rule in enumerate_pure_rules(problem, cap)? {
        let mut gain = Rational::zero();
        for a in 0..problem.n_leaves() {
            for w in 0..problem.n_states() {
                let g = joint.weight(a, w);
                if !g.is_zero() {
                    gain += (payoffs.get(rule.output(a), w) - payoffs.get(a, w)) * g;
                }
            }
        }
        if gain.is_positive() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Re-checks a verdict's certificate for `observation` from scratch.
///
/// A rule must be adapted and dominate in the observation's sense. A triple
/// must make obedience optimal and reproduce the observation: positive mass on
/// the sequence, the exact joint, or the exact marginal.
pub fn verify_witness(problem: &DecisionProblem, observation: &Observation, verdict: &Verdict) -> Result<bool> {
    match (&verdict.witness, verdict.rationalizable) {
        (Witness::DeviationRule(rule), false) => match observation {
            Observation::Sequence(a) => dominates_sequence(problem, rule, *a),
            Observation::Joint(j) => dominates_joint(problem, rule, j),
            Observation::Marginal(m) => dominates_marginal(problem, rule, m),
        },
        (Witness::ObedientTriple(triple), true) => {
            let joint = triple.joint(problem)?;
            let matches = match observation {
                Observation::Sequence(a) => joint.mass_on(*a).is_positive(),
                Observation::Joint(j) => &joint == j,
                Observation::Marginal(m) => &joint.marginal() == m,
            };
            Ok(matches && verify_obedient_optimality(problem, triple)?)
        }
        _ => Ok(false),
    }
}

/// Exact sampler over a finite distribution with rational weights.
struct Sampler {
    denominator: BigUint,
    cumulative: Vec<BigUint>,
}

impl Sampler {
    fn new(weights: &[Rational]) -> Self {
        let denominator = weights
            .iter()
            .map(|w| w.denom().magnitude().clone())
            .fold(BigUint::one(), |acc, d| acc.lcm(&d));
        let mut running = BigUint::zero();
        let cumulative = weights
            .iter()
            .map(|w| {
                let scaled = w.numer().magnitude() * (&denominator / w.denom().magnitude());
                running += scaled;
                running.clone()
            })
            .collect();
        Sampler {
            denominator,
            cumulative,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let r = rng.gen_biguint_below(&self.denominator);
        self.cumulative
            .iter()
            .position(|c| &r < c)
            .expect("weights sum to one")
    }
}

const BATCH: u64 = 8192;

/// Empirical joint distribution of `n` independent draws of
/// `ω ~ p`, `s ~ π(·|ω)`, `a ~ σ(·|s)`.
///
/// Batch `b` draws from a ChaCha8 stream `b` keyed by `seed`, so output
/// depends only on `(seed, n)`.
pub fn simulate(
    problem: &DecisionProblem,
    strategy: &Strategy,
    info: &InformationStructure,
    n: u64,
    seed: u64,
) -> Result<JointDistribution> {
    if n == 0 {
        return Err(Error::validation("sample count must be at least 1"));
    }
    if strategy.kernel.len() != info.sequences.len()
        || info.prior.len() != problem.n_states()
        || strategy.kernel.iter().any(|r| r.len() != problem.n_leaves())
    {
        return Err(Error::Shape("strategy, information structure and problem disagree".into()));
    }
    let prior = Sampler::new(&info.prior);
    let signals: Vec<Sampler> = info.kernel.iter().map(|row| Sampler::new(row)).collect();
    let actions: Vec<Sampler> = strategy.kernel.iter().map(|row| Sampler::new(row)).collect();
    let (leaves, states) = (problem.n_leaves(), problem.n_states());

    let batches = n.div_ceil(BATCH);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut counts = vec![0u64; leaves * states];
            let size = BATCH.min(n - b * BATCH);
            for _ in 0..size {
                let w = prior.draw(&mut rng);
                let s = signals[w].draw(&mut rng);
                let a = actions[s].draw(&mut rng);
                counts[a * states + w] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; leaves * states],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let total = Rational::from_integer(n.into());
    let weights = (0..leaves)
        .map(|a| {
            (0..states)
                .map(|w| Rational::from_integer(counts[a * states + w].into()) / &total)
                .collect()
        })
        .collect();
    JointDistribution::new(problem, weights)
}

/// Exact distribution of `(a, ω)` under `σ ∘ π` and `p`.
pub fn induced_joint(problem: &DecisionProblem, strategy: &Strategy, info: &InformationStructure) -> Result<JointDistribution> {
    let mut weights = vec![vec![Rational::zero(); problem.n_states()]; problem.n_leaves()];
    for (w, (p, row)) in info.prior.iter().zip(&info.kernel).enumerate() {
        for (s, pi) in row.iter().enumerate() {
            for (a, x) in strategy.kernel[s].iter().enumerate() {
                if !x.is_zero() {
                    weights[a][w] += p * pi * x;
                }
            }
        }
    }
    JointDistribution::new(problem, weights)
}

/// Total-variation distance, as a float for statistical checks.
pub fn total_variation(a: &JointDistribution, b: &JointDistribution) -> f64 {
    let sum: Rational = a
        .weights()
        .iter()
        .flatten()
        .zip(b.weights().iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .sum();
    (sum / Rational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::{int, ratio};
    use crate::model::tests::{example1, example2};

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    /// Uninformative period 1; in period 2 the good state sends `g` with
    /// probability `alpha`, the bad state always `b`.
    fn example1_structure(alpha: Rational) -> InformationStructure {
        let p = example1();
        InformationStructure::product(
            &p,
            vec![labels(&["n"]), labels(&["g", "b"])],
            vec![ratio(1, 2), ratio(1, 2)],
            vec![vec![alpha.clone(), int(1) - alpha], vec![int(0), int(1)]],
        )
        .unwrap()
    }

    /// Invest, then continue on `g` and pull back on `b`.
    fn example1_obedient(info: &InformationStructure) -> Strategy {
        let p = example1();
        Strategy::new(&p, info, vec![vec![int(0), int(0), int(1)], vec![int(0), int(1), int(0)]]).unwrap()
    }

    fn example2_revealing(delta: Rational) -> (DecisionProblem, InformationStructure) {
        let p = example2(delta);
        let info = InformationStructure::product(
            &p,
            vec![labels(&["n"]), labels(&["X", "Y"])],
            vec![ratio(1, 2), ratio(1, 2)],
            vec![vec![int(1), int(0)], vec![int(0), int(1)]],
        )
        .unwrap();
        (p, info)
    }

    #[test]
    fn values_on_examples() {
        let p = example1();
        let info = example1_structure(ratio(2, 3));
        let sigma = example1_obedient(&info);
        assert_eq!(strategy_value(&p, &sigma, &info).unwrap(), int(0));
        assert_eq!(optimal_value_dp(&p, &info).unwrap(), int(0));

        let (q, info) = example2_revealing(ratio(4, 5));
        let wait = Strategy::new(&q, &info, vec![vec![int(0), int(0), int(1), int(0)], vec![int(0), int(0), int(0), int(1)]])
            .unwrap();
        assert_eq!(strategy_value(&q, &wait, &info).unwrap(), int(4));

        let (q, info) = example2_revealing(ratio(9, 10));
        assert_eq!(optimal_value_dp(&q, &info).unwrap(), ratio(9, 2));
        let best = optimal_strategy_dp(&q, &info).unwrap();
        assert_eq!(strategy_value(&q, &best, &info).unwrap(), ratio(9, 2));
    }

    #[test]
    fn uninformative_collapse() {
        let p = example1();
        let info = InformationStructure::product(
            &p,
            vec![labels(&["n"]), labels(&["n"])],
            vec![ratio(3, 4), ratio(1, 4)],
            vec![vec![int(1)], vec![int(1)]],
        )
        .unwrap();
        let best = (0..3)
            .map(|a| ratio(3, 4) * p.utility(a, 0).unwrap() + ratio(1, 4) * p.utility(a, 1).unwrap())
            .max()
            .unwrap();
        assert_eq!(optimal_value_dp(&p, &info).unwrap(), best);
        for a in 0..3 {
            let mut row = vec![int(0); 3];
            row[a] = int(1);
            let sigma = Strategy::new(&p, &info, vec![row]).unwrap();
            let expected = ratio(3, 4) * p.utility(a, 0).unwrap() + ratio(1, 4) * p.utility(a, 1).unwrap();
            assert_eq!(strategy_value(&p, &sigma, &info).unwrap(), expected);
        }
    }

    #[test]
    fn rejects_unadapted_strategy() {
        let p = example1();
        let info = example1_structure(ratio(2, 3));
        // Not investing after `b` but investing after `g`: period-1 play depends on the period-2 signal.
        let bad = Strategy::new(&p, &info, vec![vec![int(0), int(0), int(1)], vec![int(1), int(0), int(0)]]);
        assert!(matches!(bad, Err(Error::Validation(_))));
    }

    #[test]
    fn obedient_optimality() {
        let p = example1();
        let g = JointDistribution::new(
            &p,
            vec![vec![int(0), int(0)], vec![ratio(1, 6), ratio(1, 2)], vec![ratio(1, 3), int(0)]],
        )
        .unwrap();
        assert!(verify_obedient_optimality(&p, &ObedientTriple::from_joint(&g)).unwrap());
        let bad = ObedientTriple::from_joint(&JointDistribution::point_mass(&p, 1, 0));
        assert!(!verify_obedient_optimality(&p, &bad).unwrap());
    }

    #[test]
    fn brute_force_joint() {
        let p = example1();
        let g = JointDistribution::new(
            &p,
            vec![vec![int(0), int(0)], vec![ratio(1, 6), ratio(1, 2)], vec![ratio(1, 3), int(0)]],
        )
        .unwrap();
        assert!(brute_force_rationalizable_joint(&p, &g, 1000).unwrap());
        assert!(!brute_force_rationalizable_joint(&p, &JointDistribution::point_mass(&p, 1, 0), 1000).unwrap());
        assert!(brute_force_rationalizable_joint(&p, &JointDistribution::point_mass(&p, 2, 0), 1000).unwrap());
    }

    #[test]
    fn simulation_is_seeded_and_exact_when_deterministic() {
        let (q, info) = example2_revealing(ratio(4, 5));
        let point = InformationStructure::product(
            &q,
            vec![labels(&["n"]), labels(&["X", "Y"])],
            vec![int(1), int(0)],
            vec![vec![int(1), int(0)], vec![int(0), int(1)]],
        )
        .unwrap();
        let sigma = optimal_strategy_dp(&q, &point).unwrap();
        let sim = simulate(&q, &sigma, &point, 37, 5).unwrap();
        assert_eq!(sim, induced_joint(&q, &sigma, &point).unwrap());

        let sigma = optimal_strategy_dp(&q, &info).unwrap();
        assert_eq!(simulate(&q, &sigma, &info, 20_000, 9).unwrap(), simulate(&q, &sigma, &info, 20_000, 9).unwrap());
        let one = simulate(&q, &sigma, &info, 1, 3).unwrap();
        assert_eq!(one.weights().iter().flatten().filter(|w| w.is_one()).count(), 1);
        assert!(simulate(&q, &sigma, &info, 0, 3).is_err());
    }

    #[test]
    fn simulation_converges() {
        let p = example1();
        let info = example1_structure(ratio(2, 3));
        let sigma = example1_obedient(&info);
        let sim = simulate(&p, &sigma, &info, 100_000, 2024).unwrap();
        let ip = crate::model::rational::approx(&sim.mass_on(1));
        assert!((ip - 2.0 / 3.0).abs() < 0.01, "IP frequency {ip}");
        assert!(total_variation(&sim, &induced_joint(&p, &sigma, &info).unwrap()) < 0.01);
    }

    #[test]
    fn json_loading() {
        let p = example1();
        let info = InformationStructure::from_json(
            &p,
            &serde_json::json!({
                "signals": [["n"], ["g", "b"]],
                "prior": { "good": "1/2", "bad": "1/2" },
                "kernel": { "good": { "n,g": "2/3", "n,b": "1/3" }, "bad": { "n,b": 1 } }
            }),
        )
        .unwrap();
        assert_eq!(info, example1_structure(ratio(2, 3)));
        let sigma = Strategy::from_json(
            &p,
            &info,
            &serde_json::json!({ "n,g": "invest,invest", "n,b": { "invest,pull_back": 1 } }),
        )
        .unwrap();
        assert_eq!(sigma, example1_obedient(&info));
        assert!(Strategy::from_json(&p, &info, &serde_json::json!({ "n,g": "invest,invest" })).is_err());
    }
}
