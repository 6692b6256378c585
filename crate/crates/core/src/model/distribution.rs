use num_traits::Zero;
use serde_json::{Map, Value};

use super::rational::{check_probability_vector, format_rational, parse_rational, Rational};
use super::{DecisionProblem, LeafId, StateId};
use crate::error::{Error, Result};

/// Observed joint distribution over (action sequence, state) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointDistribution {
    /// Indexed `[leaf][state]`.
    weights: Vec<Vec<Rational>>,
}

/// Observed distribution over action sequences only.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarginalDistribution {
    weights: Vec<Rational>,
}

impl JointDistribution {
    pub fn new(problem: &DecisionProblem, weights: Vec<Vec<Rational>>) -> Result<Self> {
        if weights.len() != problem.n_leaves() || weights.iter().any(|r| r.len() != problem.n_states()) {
            return Err(Error::Shape(format!(
                "joint distribution must be {}x{}",
                problem.n_leaves(),
                problem.n_states()
            )));
        }
        check_probability_vector(weights.iter().flatten(), "joint distribution")?;
        Ok(JointDistribution { weights })
    }

    pub fn point_mass(problem: &DecisionProblem, leaf: LeafId, state: StateId) -> Self {
        let mut weights = vec![vec![Rational::zero(); problem.n_states()]; problem.n_leaves()];
        weights[leaf][state] = Rational::from_integer(1.into());
        JointDistribution { weights }
    }

    pub fn weight(&self, leaf: LeafId, state: StateId) -> &Rational {
        &self.weights[leaf][state]
    }

    pub fn weights(&self) -> &[Vec<Rational>] {
        &self.weights
    }

    pub fn n_leaves(&self) -> usize {
        self.weights.len()
    }

    pub fn n_states(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// `Σ_ω γ(a, ω)`.
    pub fn mass_on(&self, leaf: LeafId) -> Rational {
        self.weights[leaf].iter().sum()
    }

    pub fn marginal(&self) -> MarginalDistribution {
        MarginalDistribution {
            weights: (0..self.n_leaves()).map(|l| self.mass_on(l)).collect(),
        }
    }

    /// Marginal on states, i.e. the prior of any triple inducing this distribution.
    pub fn state_marginal(&self) -> Vec<Rational> {
        (0..self.n_states())
            .map(|s| self.weights.iter().map(|row| &row[s]).sum())
            .collect()
    }

    /// `t·self + (1−t)·other`.
    pub fn mix(&self, other: &JointDistribution, t: &Rational) -> Result<JointDistribution> {
        if self.n_leaves() != other.n_leaves() || self.n_states() != other.n_states() {
            return Err(Error::Shape("mixing distributions of different shapes".into()));
        }
        if t < &Rational::zero() || t > &Rational::from_integer(1.into()) {
            return Err(Error::InvalidWeights(format!("mixing weight {t} outside [0, 1]")));
        }
        let s = Rational::from_integer(1.into()) - t;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| t * x + &s * y).collect())
            .collect();
        Ok(JointDistribution { weights })
    }

    /// Inline form `leaf@state:p, ...`; leaf ids may themselves contain commas.
    pub fn parse_inline(problem: &DecisionProblem, text: &str) -> Result<Self> {
        let mut weights = vec![vec![Rational::zero(); problem.n_states()]; problem.n_leaves()];
        let mut seen = vec![vec![false; problem.n_states()]; problem.n_leaves()];
        for (key, value) in split_inline(text)? {
            let (leaf, state) = key
                .rsplit_once('@')
                .ok_or_else(|| Error::parse(format!("joint entry `{key}` must be `leaf@state`")))?;
            let (l, s) = (problem.leaf_id(leaf)?, problem.state_id(state.trim())?);
            if std::mem::replace(&mut seen[l][s], true) {
                return Err(Error::validation(format!("duplicate entry for `{key}`")));
            }
            weights[l][s] = parse_rational(value)?;
        }
        JointDistribution::new(problem, weights)
    }

    /// JSON form `{ "<leaf-id>": { "<state>": "p/q" } }`.
    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("joint distribution must be a JSON object"))?;
        let mut weights = vec![vec![Rational::zero(); problem.n_states()]; problem.n_leaves()];
        for (leaf, row) in obj {
            let l = problem.leaf_id(leaf)?;
            let row = row
                .as_object()
                .ok_or_else(|| Error::parse(format!("row `{leaf}` must map states to weights")))?;
            for (state, w) in row {
                weights[l][problem.state_id(state)?] = json_rational(w)?;
            }
        }
        JointDistribution::new(problem, weights)
    }

    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        let mut obj = Map::new();
        for (l, row) in self.weights.iter().enumerate() {
            let mut inner = Map::new();
            for (s, w) in row.iter().enumerate() {
                if !w.is_zero() {
                    inner.insert(problem.states()[s].clone(), Value::String(format_rational(w)));
                }
            }
            if !inner.is_empty() {
                obj.insert(problem.leaf_label(l), Value::Object(inner));
            }
        }
        Value::Object(obj)
    }
}

impl MarginalDistribution {
    pub fn new(problem: &DecisionProblem, weights: Vec<Rational>) -> Result<Self> {
        if weights.len() != problem.n_leaves() {
            return Err(Error::Shape(format!(
                "marginal distribution needs {} weights, got {}",
                problem.n_leaves(),
                weights.len()
            )));
        }
        check_probability_vector(&weights, "marginal distribution")?;
        Ok(MarginalDistribution { weights })
    }

    pub fn point_mass(problem: &DecisionProblem, leaf: LeafId) -> Self {
        let mut weights = vec![Rational::zero(); problem.n_leaves()];
        weights[leaf] = Rational::from_integer(1.into());
        MarginalDistribution { weights }
    }

    pub fn weight(&self, leaf: LeafId) -> &Rational {
        &self.weights[leaf]
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn n_leaves(&self) -> usize {
        self.weights.len()
    }

    /// Inline form `leaf:p, ...`.
    pub fn parse_inline(problem: &DecisionProblem, text: &str) -> Result<Self> {
        let mut weights = vec![Rational::zero(); problem.n_leaves()];
        let mut seen = vec![false; problem.n_leaves()];
        for (key, value) in split_inline(text)? {
            let l = problem.leaf_id(key)?;
            if std::mem::replace(&mut seen[l], true) {
                return Err(Error::validation(format!("duplicate entry for `{key}`")));
            }
            weights[l] = parse_rational(value)?;
        }
        MarginalDistribution::new(problem, weights)
    }

    /// JSON form `{ "<leaf-id>": "p/q" }`.
    pub fn from_json(problem: &DecisionProblem, value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("marginal distribution must be a JSON object"))?;
        let mut weights = vec![Rational::zero(); problem.n_leaves()];
        for (leaf, w) in obj {
            weights[problem.leaf_id(leaf)?] = json_rational(w)?;
        }
        MarginalDistribution::new(problem, weights)
    }

    pub fn to_json(&self, problem: &DecisionProblem) -> Value {
        let mut obj = Map::new();
        for (l, w) in self.weights.iter().enumerate() {
            if !w.is_zero() {
                obj.insert(problem.leaf_label(l), Value::String(format_rational(w)));
            }
        }
        Value::Object(obj)
    }
}

/// Reads a rational from a JSON number (exact, via its literal text) or string.
pub(crate) fn json_rational(value: &Value) -> Result<Rational> {
    match value {
        Value::Number(n) => parse_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        other => Err(Error::parse(format!("expected a number or \"p/q\" string, got {other}"))),
    }
}

/// Splits `key:value` entries separated by `,` or `;`. Values never contain
/// separators, so keys (leaf ids) may contain commas.
fn split_inline(text: &str) -> Result<Vec<(&str, &str)>> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let colon = rest
            .find(':')
            .ok_or_else(|| Error::parse(format!("entry `{rest}` is missing `:weight`")))?;
        let key = rest[..colon].trim().trim_start_matches([',', ';']).trim();
        let after = &rest[colon + 1..];
        let end = after.find([',', ';']).unwrap_or(after.len());
        let value = after[..end].trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::parse(format!("malformed distribution entry in `{text}`")));
        }
        out.push((key, value));
        rest = after[end..].trim_start_matches([',', ';']).trim();
    }
    if out.is_empty() {
        return Err(Error::parse("empty distribution"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::ratio;
    use crate::model::tests::example1;

    #[test]
    fn inline_parsing_handles_commas_in_leaf_ids() {
        let p = example1();
        let m = MarginalDistribution::parse_inline(&p, "invest,pull_back:2/3, invest,invest:1/3").unwrap();
        assert_eq!(m.weights(), &[ratio(0, 1), ratio(2, 3), ratio(1, 3)]);
        let j = JointDistribution::parse_inline(
            &p,
            "invest,pull_back@bad:1/2;invest,pull_back@good:1/6;invest,invest@good:1/3",
        )
        .unwrap();
        assert_eq!(j.mass_on(1), ratio(2, 3));
        assert_eq!(j.state_marginal(), vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(j.marginal(), MarginalDistribution::new(&p, vec![ratio(0, 1), ratio(2, 3), ratio(1, 3)]).unwrap());
    }

    #[test]
    fn rejects_bad_distributions() {
        let p = example1();
        assert!(MarginalDistribution::parse_inline(&p, "invest,pull_back:1/2").is_err());
        assert!(MarginalDistribution::parse_inline(&p, "nope:1").is_err());
        assert!(MarginalDistribution::parse_inline(&p, "not_invest:1,not_invest:0").is_err());
        assert!(JointDistribution::parse_inline(&p, "not_invest:1").is_err());
        assert!(MarginalDistribution::new(&p, vec![ratio(2, 1), ratio(-1, 1), ratio(0, 1)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = example1();
        let j = JointDistribution::parse_inline(&p, "invest,invest@good:1/4,not_invest@bad:3/4").unwrap();
        let back = JointDistribution::from_json(&p, &j.to_json(&p)).unwrap();
        assert_eq!(back, j);
        let m = j.marginal();
        assert_eq!(MarginalDistribution::from_json(&p, &m.to_json(&p)).unwrap(), m);
    }
}
