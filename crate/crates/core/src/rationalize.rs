//! The four dominance tests as linear programs, and witness extraction in
//! both directions: a dominating deviation rule when the data cannot be
//! rationalized, an obedient triple when it can.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::deviation::{
    dominates_joint, dominates_marginal, dominates_sequence, enumerate_pure_rules, DeviationRule, PureDeviationRule,
    DEFAULT_RULE_CAP,
};
use crate::error::{Error, Result};
use crate::lp::{add_deviation_polytope, solve, LinearProgram, LpSolution, Relation, Sense, VarId};
use crate::model::rational::{check_probability_vector, format_rational, Rational};
use crate::model::{json_rational, DecisionProblem, JointDistribution, LeafId, MarginalDistribution, Payoffs};

/// A lottery over action sequences beating `a` in every state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApparentDominanceWitness {
    pub lottery: Vec<Rational>,
    /// `min_ω u(α, ω) − u(a, ω)`; always positive.
    pub margin: Rational,
}

/// Prior plus recommendation kernel `π(a|ω)`, with signals equal to
/// recommended sequences and the identity strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObedientTriple {
    pub prior: Vec<Rational>,
    /// Indexed `[state][leaf]`.
    pub recommendation: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    ObedientTriple(ObedientTriple),
    DeviationRule(DeviationRule),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub rationalizable: bool,
    pub witness: Witness,
}

/// What was observed: one action sequence, a joint action–state
/// distribution, or a distribution over action sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observation {
    Sequence(LeafId),
    Joint(JointDistribution),
    Marginal(MarginalDistribution),
}

/// Side condition on the joint distribution searched for by
/// [`Analyzer::rationalizing_joint`].
#[derive(Debug, Clone, Copy)]
pub enum Requirement<'a> {
    /// Positive probability on this sequence.
    PositiveOn(LeafId),
    /// Exactly this action marginal.
    Marginal(&'a MarginalDistribution),
    /// Exactly this joint distribution.
    Joint(&'a JointDistribution),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub lp_solves: u64,
    pub pivots: u64,
    pub rules_enumerated: u64,
}

/// Runs the tests on one parameter-free problem, caching the pure-rule
/// enumeration and the obedience rows it induces.
#[derive(Debug)]
pub struct Analyzer {
    problem: DecisionProblem,
    payoffs: Payoffs,
    cap: u64,
    rules: OnceLock<Result<Vec<PureDeviationRule>>>,
    obedience: OnceLock<Result<Vec<Vec<Rational>>>>,
    lp_solves: AtomicU64,
    pivots: AtomicU64,
}

impl Analyzer {
    pub fn new(problem: &DecisionProblem) -> Result<Self> {
        Analyzer::with_cap(problem, DEFAULT_RULE_CAP)
    }

    pub fn with_cap(problem: &DecisionProblem, cap: u64) -> Result<Self> {
        let payoffs = problem.payoffs()?.clone();
        Ok(Analyzer {
            problem: problem.clone(),
            payoffs,
            cap,
            rules: OnceLock::new(),
            obedience: OnceLock::new(),
            lp_solves: AtomicU64::new(0),
            pivots: AtomicU64::new(0),
        })
    }

    pub fn problem(&self) -> &DecisionProblem {
        &self.problem
    }

    pub fn stats(&self) -> SolverStats {
        SolverStats {
            lp_solves: self.lp_solves.load(Ordering::Relaxed),
            pivots: self.pivots.load(Ordering::Relaxed),
            rules_enumerated: self
                .rules
                .get()
                .and_then(|r| r.as_ref().ok())
                .map_or(0, |r| r.len() as u64),
        }
    }

    fn u(&self, leaf: LeafId, state: usize) -> &Rational {
        self.payoffs.get(leaf, state)
    }

    fn run(&self, lp: &LinearProgram) -> LpSolution {
        let s = solve(lp);
        self.lp_solves.fetch_add(1, Ordering::Relaxed);
        self.pivots.fetch_add(s.pivots, Ordering::Relaxed);
        s
    }

    pub fn pure_rules(&self) -> Result<&[PureDeviationRule]> {
        self.rules
            .get_or_init(|| enumerate_pure_rules(&self.problem, self.cap))
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    /// Distinct non-zero rows `r` with `Σ r[a·|Ω|+ω]·γ(a, ω) ≤ 0` required of
    /// every rationalizable `γ`, one per pure rule, each scaled to a
    /// primitive integer vector.
    fn obedience_rows(&self) -> Result<&[Vec<Rational>]> {
        self.obedience
            .get_or_init(|| {
                let rules = self.pure_rules()?;
                let (n, m) = (self.problem.n_leaves(), self.problem.n_states());
                let rows: Vec<Vec<Rational>> = rules
                    .par_iter()
                    .map(|rule| {
                        let row: Vec<Rational> = (0..n)
                            .flat_map(|a| (0..m).map(move |s| (a, s)))
                            .map(|(a, s)| self.u(rule.output(a), s) - self.u(a, s))
                            .collect();
                        primitive(row)
                    })
                    .collect();
                let mut seen = HashSet::new();
                Ok(rows
                    .into_iter()
                    .filter(|r: &Vec<Rational>| r.iter().any(|x| !x.is_zero()))
                    .filter(|r| seen.insert(r.clone()))
                    .collect())
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    /// Best lottery against `a` in the worst state; `None` unless it wins strictly.
    pub fn apparently_dominated(&self, a: LeafId) -> Result<Option<ApparentDominanceWitness>> {
        let p = &self.problem;
        let mut lp = LinearProgram::new(Sense::Maximize);
        let alpha: Vec<VarId> = (0..p.n_leaves())
            .map(|b| lp.add_var(format!("alpha[{}]", p.leaf_label(b)), Some(Rational::zero()), Some(Rational::one())))
            .collect();
        let k = lp.free("k");
        lp.add_constraint(
            "simplex",
            alpha.iter().map(|&v| (v, Rational::one())).collect(),
            Relation::Eq,
            Rational::one(),
        );
        for s in 0..p.n_states() {
            let mut terms: Vec<(VarId, Rational)> = alpha.iter().enumerate().map(|(b, &v)| (v, self.u(b, s).clone())).collect();
            terms.push((k, -Rational::one()));
            lp.add_constraint(format!("beats[{}]", p.states()[s]), terms, Relation::Ge, self.u(a, s).clone());
        }
        lp.set_objective(vec![(k, Rational::one())]);
        let sol = self.run(&lp);
        if !sol.is_positive() {
            return Ok(None);
        }
        Ok(Some(ApparentDominanceWitness {
            lottery: alpha.iter().map(|&v| sol.var(v).clone()).collect(),
            margin: sol.value.expect("optimal"),
        }))
    }

    /// Improvement expression `Σ_c [u(c, ω) − u(b, ω)]·D(c|b)` over kernel variables.
    fn improvement_terms(&self, kernel: &[Vec<VarId>], b: LeafId, s: usize) -> Vec<(VarId, Rational)> {
        kernel[b]
            .iter()
            .enumerate()
            .map(|(c, &v)| (v, self.u(c, s) - self.u(b, s)))
            .collect()
    }

    fn rule_from(&self, kernel: Vec<Vec<Rational>>) -> Result<DeviationRule> {
        DeviationRule::new(&self.problem, kernel)
            .map_err(|e| Error::Inconsistent(format!("LP returned an invalid deviation rule: {e}")))
    }

    /// A deviation rule that truly dominates `a`, if any.
    pub fn truly_dominated(&self, a: LeafId) -> Result<Option<DeviationRule>> {
        let p = &self.problem;
        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars = add_deviation_polytope(&mut lp, p);
        let k = lp.free("k");
        for b in 0..p.n_leaves() {
            for s in 0..p.n_states() {
                let terms = self.improvement_terms(&vars.kernel, b, s);
                if terms.iter().any(|(_, c)| !c.is_zero()) {
                    lp.add_constraint(
                        format!("weak[{}@{}]", p.leaf_label(b), p.states()[s]),
                        terms,
                        Relation::Ge,
                        Rational::zero(),
                    );
                }
            }
        }
        for s in 0..p.n_states() {
            let mut terms: Vec<(VarId, Rational)> =
                self.improvement_terms(&vars.kernel, a, s).into_iter().map(|(v, c)| (v, -c)).collect();
            terms.push((k, Rational::one()));
            lp.add_constraint(format!("strict[{}]", p.states()[s]), terms, Relation::Le, Rational::zero());
        }
        lp.set_objective(vec![(k, Rational::one())]);
        let sol = self.run(&lp);
        if !sol.is_positive() {
            return Ok(None);
        }
        let rule = self.rule_from(vars.extract(&sol))?;
        if !dominates_sequence(p, &rule, a)? {
            return Err(Error::Inconsistent("true-dominance LP witness fails the dominance check".into()));
        }
        Ok(Some(rule))
    }

    /// A deviation rule with positive expected improvement under `joint`, if any.
    pub fn dominated_on_average(&self, joint: &JointDistribution) -> Result<Option<DeviationRule>> {
        let p = &self.problem;
        self.check_joint_shape(joint)?;
        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars = add_deviation_polytope(&mut lp, p);
        let mut objective = Vec::new();
        for a in 0..p.n_leaves() {
            for s in 0..p.n_states() {
                let w = joint.weight(a, s);
                if w.is_zero() {
                    continue;
                }
                objective.extend(self.improvement_terms(&vars.kernel, a, s).into_iter().map(|(v, c)| (v, c * w)));
            }
        }
        lp.set_objective(merge_terms(objective));
        let sol = self.run(&lp);
        if !sol.is_positive() {
            return Ok(None);
        }
        let rule = self.rule_from(vars.extract(&sol))?;
        if !dominates_joint(p, &rule, joint)? {
            return Err(Error::Inconsistent("average-dominance LP witness fails the dominance check".into()));
        }
        Ok(Some(rule))
    }

    /// A deviation rule with positive worst-state improvement averaged under
    /// `marginal`, if any.
    pub fn intermediately_dominated(&self, marginal: &MarginalDistribution) -> Result<Option<DeviationRule>> {
        let p = &self.problem;
        self.check_marginal_shape(marginal)?;
        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars = add_deviation_polytope(&mut lp, p);
        let mut objective = Vec::new();
        for a in 0..p.n_leaves() {
            let w = marginal.weight(a);
            if w.is_zero() {
                continue;
            }
            let k = lp.free(format!("k[{}]", p.leaf_label(a)));
            for s in 0..p.n_states() {
                let mut terms: Vec<(VarId, Rational)> =
                    self.improvement_terms(&vars.kernel, a, s).into_iter().map(|(v, c)| (v, -c)).collect();
                terms.push((k, Rational::one()));
                lp.add_constraint(
                    format!("worst[{}@{}]", p.leaf_label(a), p.states()[s]),
                    terms,
                    Relation::Le,
                    Rational::zero(),
                );
            }
            objective.push((k, w.clone()));
        }
        lp.set_objective(objective);
        let sol = self.run(&lp);
        if !sol.is_positive() {
            return Ok(None);
        }
        let rule = self.rule_from(vars.extract(&sol))?;
        if !dominates_marginal(p, &rule, marginal)? {
            return Err(Error::Inconsistent("intermediate-dominance LP witness fails the dominance check".into()));
        }
        Ok(Some(rule))
    }

    /// Joint distributions obeying the obedience rows listed in `active`, as
    /// a program over `γ(a, ω)`, plus the variable grid.
    fn obedience_program(&self, rows: &[Vec<Rational>], active: &[usize]) -> (LinearProgram, Vec<Vec<VarId>>) {
        let p = &self.problem;
        let mut lp = LinearProgram::new(Sense::Maximize);
        let gamma: Vec<Vec<VarId>> = (0..p.n_leaves())
            .map(|a| {
                (0..p.n_states())
                    .map(|s| {
                        lp.add_var(
                            format!("gamma[{}@{}]", p.leaf_label(a), p.states()[s]),
                            Some(Rational::zero()),
                            Some(Rational::one()),
                        )
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<VarId> = gamma.iter().flatten().copied().collect();
        lp.add_constraint(
            "total",
            flat.iter().map(|&v| (v, Rational::one())).collect(),
            Relation::Eq,
            Rational::one(),
        );
        for &i in active {
            lp.add_constraint(
                format!("obey[{i}]"),
                flat.iter()
                    .copied()
                    .zip(rows[i].iter().cloned())
                    .filter(|(_, c)| !c.is_zero())
                    .collect(),
                Relation::Le,
                Rational::zero(),
            );
        }
        (lp, gamma)
    }

    /// Solves the obedience program extended by `extend`, adding obedience
    /// rows lazily: each round keeps the rows violated by the last solution.
    /// The final solution satisfies every row, so it solves the full program.
    /// `None` when the program is infeasible.
    fn solve_obedience(
        &self,
        extend: impl Fn(&mut LinearProgram, &[Vec<VarId>]),
    ) -> Result<Option<(LpSolution, Vec<Vec<VarId>>)>> {
        const ROWS_PER_ROUND: usize = 12;
        let rows = self.obedience_rows()?;
        let mut active: Vec<usize> = Vec::new();
        loop {
            let (mut lp, gamma) = self.obedience_program(rows, &active);
            extend(&mut lp, &gamma);
            let sol = self.run(&lp);
            if !sol.is_optimal() {
                return Ok(None);
            }
            let point: Vec<&Rational> = gamma.iter().flatten().map(|&v| sol.var(v)).collect();
            let mut violated: Vec<(Rational, usize)> = rows
                .par_iter()
                .enumerate()
                .filter_map(|(i, row)| {
                    let slack: Rational = row
                        .iter()
                        .zip(&point)
                        .filter(|(c, x)| !c.is_zero() && !x.is_zero())
                        .map(|(c, x)| c * *x)
                        .sum();
                    slack.is_positive().then_some((slack, i))
                })
                .collect();
            if violated.is_empty() {
                return Ok(Some((sol, gamma)));
            }
            violated.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            active.extend(violated.into_iter().take(ROWS_PER_ROUND).map(|(_, i)| i));
        }
    }

    fn joint_from(&self, sol: &LpSolution, gamma: &[Vec<VarId>]) -> Result<JointDistribution> {
        let weights = gamma
            .iter()
            .map(|row| row.iter().map(|&v| sol.var(v).clone()).collect())
            .collect();
        JointDistribution::new(&self.problem, weights)
    }

    /// Largest `Σ_ω γ(a, ω)` over rationalizable `γ`, with a maximizer.
    pub fn max_marginal(&self, a: LeafId) -> Result<(Rational, JointDistribution)> {
        if a >= self.problem.n_leaves() {
            return Err(Error::UnknownLeaf(a.to_string()));
        }
        let (sol, gamma) = self
            .solve_obedience(|lp, gamma| lp.set_objective(gamma[a].iter().map(|&v| (v, Rational::one())).collect()))?
            .ok_or_else(|| Error::Inconsistent("obedience program is infeasible".into()))?;
        Ok((sol.value.clone().expect("optimal"), self.joint_from(&sol, &gamma)?))
    }

    /// A joint distribution satisfying every obedience constraint and `requirement`.
    pub fn rationalizing_joint(&self, requirement: Requirement<'_>) -> Result<Option<JointDistribution>> {
        let p = &self.problem;
        let found = match requirement {
            Requirement::PositiveOn(a) => {
                let (value, joint) = self.max_marginal(a)?;
                return Ok(value.is_positive().then_some(joint));
            }
            Requirement::Marginal(m) => {
                self.check_marginal_shape(m)?;
                self.solve_obedience(|lp, gamma| {
                    for (a, row) in gamma.iter().enumerate() {
                        lp.add_constraint(
                            format!("marginal[{}]", p.leaf_label(a)),
                            row.iter().map(|&v| (v, Rational::one())).collect(),
                            Relation::Eq,
                            m.weight(a).clone(),
                        );
                    }
                })?
            }
            Requirement::Joint(j) => {
                self.check_joint_shape(j)?;
                self.solve_obedience(|lp, gamma| {
                    for (a, row) in gamma.iter().enumerate() {
                        for (s, &v) in row.iter().enumerate() {
                            let w = Some(j.weight(a, s).clone());
                            lp.variables[v.0].lower = w.clone();
                            lp.variables[v.0].upper = w;
                        }
                    }
                })?
            }
        };
        found.map(|(sol, gamma)| self.joint_from(&sol, &gamma)).transpose()
    }

    fn check_joint_shape(&self, joint: &JointDistribution) -> Result<()> {
        if joint.n_leaves() != self.problem.n_leaves() || joint.n_states() != self.problem.n_states() {
            return Err(Error::Shape("joint distribution does not match the problem".into()));
        }
        Ok(())
    }

    fn check_marginal_shape(&self, marginal: &MarginalDistribution) -> Result<()> {
        if marginal.n_leaves() != self.problem.n_leaves() {
            return Err(Error::Shape("marginal distribution does not match the problem".into()));
        }
        Ok(())
    }

    /// Decides whether `a` can be rationalized, with a certificate either way.
    pub fn rationalize_sequence(&self, a: LeafId) -> Result<Verdict> {
        if a >= self.problem.n_leaves() {
            return Err(Error::UnknownLeaf(a.to_string()));
        }
        let rule = self.truly_dominated(a)?;
        let joint = self.rationalizing_joint(Requirement::PositiveOn(a))?;
        self.dichotomy("sequence", rule, joint)
    }

    /// Decides whether `joint` can be rationalized (action–state data).
    pub fn check_joint(&self, joint: &JointDistribution) -> Result<Verdict> {
        let rule = self.dominated_on_average(joint)?;
        let found = self.rationalizing_joint(Requirement::Joint(joint))?;
        self.dichotomy("joint", rule, found)
    }

    /// Decides whether `marginal` can be rationalized (action data only).
    pub fn check_marginal(&self, marginal: &MarginalDistribution) -> Result<Verdict> {
        let rule = self.intermediately_dominated(marginal)?;
        let found = self.rationalizing_joint(Requirement::Marginal(marginal))?;
        self.dichotomy("marginal", rule, found)
    }

    pub fn check(&self, observation: &Observation) -> Result<Verdict> {
        match observation {
            Observation::Sequence(a) => self.rationalize_sequence(*a),
            Observation::Joint(j) => self.check_joint(j),
            Observation::Marginal(m) => self.check_marginal(m),
        }
    }

    fn dichotomy(&self, what: &str, rule: Option<DeviationRule>, joint: Option<JointDistribution>) -> Result<Verdict> {
        match (rule, joint) {
            (Some(rule), None) => Ok(Verdict {
                rationalizable: false,
                witness: Witness::DeviationRule(rule),
            }),
            (None, Some(joint)) => Ok(Verdict {
                rationalizable: true,
                witness: Witness::ObedientTriple(ObedientTriple::from_joint(&joint)),
            }),
            (Some(_), Some(_)) => Err(Error::Inconsistent(format!(
                "{what} test found both a dominating rule and a rationalizing distribution"
            ))),
            (None, None) => Err(Error::Inconsistent(format!(
                "{what} test found neither a dominating rule nor a rationalizing distribution"
            ))),
        }
    }
}

/// Positive multiple of `row` with coprime integer entries.
fn primitive(row: Vec<Rational>) -> Vec<Rational> {
    let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return row;
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &gcd)).collect()
}

/// Sums coefficients of repeated variables.
fn merge_terms(terms: Vec<(VarId, Rational)>) -> Vec<(VarId, Rational)> {
    let mut merged: std::collections::BTreeMap<VarId, Rational> = Default::default();
    for (v, c) in terms {
        *merged.entry(v).or_insert_with(Rational::zero) += c;
    }
    merged.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl ObedientTriple {
    /// `p(ω) = Σ_a γ(a, ω)` and `π(a|ω) = γ(a, ω)/p(ω)`; a null state
    /// recommends the first sequence.
    pub fn from_joint(joint: &JointDistribution) -> Self {
        let prior = joint.state_marginal();
        let recommendation = prior
            .iter()
            .enumerate()
            .map(|(s, p)| {
                (0..joint.n_leaves())
                    .map(|a| {
                        if p.is_zero() {
                            if a == 0 {
                                Rational::one()
                            } else {
                                Rational::zero()
                            }
                        } else {
                            joint.weight(a, s) / p
                        }
                    })
                    .collect()
            })
            .collect();
        ObedientTriple { prior, recommendation }
    }

    pub fn new(problem: &DecisionProblem, prior: Vec<Rational>, recommendation: Vec<Vec<Rational>>) -> Result<Self> {
        if prior.len() != problem.n_states()
            || recommendation.len() != problem.n_states()
            || recommendation.iter().any(|r| r.len() != problem.n_leaves())
        {
            return Err(Error::Shape("obedient triple does not match the problem".into()));
        }
        check_probability_vector(&prior, "prior")?;
        for (s, row) in recommendation.iter().enumerate() {
            check_probability_vector(row, &format!("recommendation in state `{}`", problem.states()[s]))?;
        }
        Ok(ObedientTriple { prior, recommendation })
    }

    /// `γ(a, ω) = π(a|ω)·p(ω)`.
    pub fn joint(&self, problem: &DecisionProblem) -> Result<JointDistribution> {
        let weights = (0..problem.n_leaves())
            .map(|a| self.prior.iter().enumerate().map(|(s, p)| &self.recommendation[s][a] * p).collect())
            .collect();
        JointDistribution::new(problem, weights)
    }

    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        let prior: Map<String, Value> = problem
            .states()
            .iter()
            .zip(&self.prior)
            .map(|(s, p)| (s.clone(), Value::String(format_rational(p))))
            .collect();
        let rec: Map<String, Value> = problem
            .states()
            .iter()
            .zip(&self.recommendation)
            .map(|(s, row)| {
                let inner: Map<String, Value> = row
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| !w.is_zero())
                    .map(|(a, w)| (problem.leaf_label(a), Value::String(format_rational(w))))
                    .collect();
                (s.clone(), Value::Object(inner))
            })
            .collect();
        json!({ "prior": prior, "recommendation": rec })
    }

    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        let prior_obj = value
            .get("prior")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::parse("obedient triple needs a `prior` object"))?;
        let mut prior = vec![Rational::zero(); problem.n_states()];
        for (state, w) in prior_obj {
            prior[problem.state_id(state)?] = json_rational(w)?;
        }
        let rec_obj = value
            .get("recommendation")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::parse("obedient triple needs a `recommendation` object"))?;
        let mut recommendation = vec![vec![Rational::zero(); problem.n_leaves()]; problem.n_states()];
        for (state, row) in rec_obj {
            let s = problem.state_id(state)?;
            let row = row
                .as_object()
                .ok_or_else(|| Error::parse(format!("recommendation for `{state}` must be an object")))?;
            for (leaf, w) in row {
                recommendation[s][problem.leaf_id(leaf)?] = json_rational(w)?;
            }
        }
        ObedientTriple::new(problem, prior, recommendation)
    }
}

impl ApparentDominanceWitness {
    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        let lottery: Map<String, Value> = self
            .lottery
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(b, w)| (problem.leaf_label(b), Value::String(format_rational(w))))
            .collect();
        json!({ "lottery": lottery, "margin": format_rational(&self.margin) })
    }
}

impl Witness {
    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        match self {
            Witness::ObedientTriple(t) => {
                let mut v = t.to_json(problem);
                v["kind"] = json!("obedient_triple");
                if let Ok(joint) = t.joint(problem) {
                    v["joint"] = joint.to_json(problem);
                }
                v
            }
            Witness::DeviationRule(d) => json!({ "kind": "deviation_rule", "rule": d.to_json(problem) }),
        }
    }

    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        match value.get("kind").and_then(Value::as_str) {
            Some("obedient_triple") => Ok(Witness::ObedientTriple(ObedientTriple::from_json(problem, value)?)),
            Some("deviation_rule") => Ok(Witness::DeviationRule(DeviationRule::from_json(
                problem,
                value.get("rule").ok_or_else(|| Error::parse("deviation-rule witness needs `rule`"))?,
            )?)),
            _ => Err(Error::parse("witness `kind` must be \"obedient_triple\" or \"deviation_rule\"")),
        }
    }
}

impl Verdict {
    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        json!({ "rationalizable": self.rationalizable, "witness": self.witness.to_json(problem) })
    }

    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        let rationalizable = value
            .get("rationalizable")
            .and_then(Value::as_bool)
            .ok_or_else(|| Error::parse("verdict needs a boolean `rationalizable`"))?;
        let witness = Witness::from_json(
            problem,
            value.get("witness").ok_or_else(|| Error::parse("verdict needs a `witness`"))?,
        )?;
        Ok(Verdict { rationalizable, witness })
    }
}

impl Observation {
    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        match self {
            Observation::Sequence(a) => json!({ "sequence": problem.leaf_label(*a) }),
            Observation::Joint(j) => json!({ "joint": j.to_json(problem) }),
            Observation::Marginal(m) => json!({ "marginal": m.to_json(problem) }),
        }
    }

    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        if let Some(seq) = value.get("sequence").and_then(Value::as_str) {
            Ok(Observation::Sequence(problem.leaf_id(seq)?))
        } else if let Some(j) = value.get("joint") {
            Ok(Observation::Joint(JointDistribution::from_json(problem, j)?))
        } else if let Some(m) = value.get("marginal") {
            Ok(Observation::Marginal(MarginalDistribution::from_json(problem, m)?))
        } else {
            Err(Error::parse("observation needs `sequence`, `joint` or `marginal`"))
        }
    }
}
