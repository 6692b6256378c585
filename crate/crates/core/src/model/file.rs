//! JSON problem files.
//!
//! ```json
//! { "periods": 2, "states": ["good", "bad"], "params": [],
//!   "tree": { "not_invest": "leaf", "invest": { "pull_back": "leaf", "invest": "leaf" } },
//!   "utility": { "not_invest": { "good": 0, "bad": 0 }, ... } }
//! ```
//!
//! Leaf ids are the unpadded action path joined by `,`. Utility entries are
//! numbers, `"p/q"` strings, or affine expressions over the declared params.

use serde_json::{Map, Value};

use super::distribution::json_rational;
use super::{AffineExpr, DecisionProblem, TreeSpec};
use crate::error::{Error, Result};

const KEYS: [&str; 5] = ["periods", "states", "params", "tree", "utility"];

impl DecisionProblem {
    /// Parses and validates a problem file.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        DecisionProblem::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("problem file must be a JSON object"))?;
        if let Some(unknown) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::parse(format!("unknown key `{unknown}` in problem file")));
        }
        let periods = obj
            .get("periods")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::parse("`periods` must be a positive integer"))? as usize;
        let states = string_list(obj.get("states"), "states")?
            .ok_or_else(|| Error::parse("`states` is required"))?;
        let params = string_list(obj.get("params"), "params")?.unwrap_or_default();
        let tree = parse_node(obj.get("tree").ok_or_else(|| Error::parse("`tree` is required"))?)?;
        let utility = obj
            .get("utility")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::parse("`utility` must be an object"))?;

        // Build once with placeholder utilities to learn the leaf order.
        let n_leaves = count_leaves(&tree);
        let zero = AffineExpr::constant(Default::default(), params.len());
        let skeleton = DecisionProblem::new(
            periods,
            states.clone(),
            params.clone(),
            &tree,
            vec![vec![zero; states.len()]; n_leaves],
        )?;

        let mut table: Vec<Vec<Option<AffineExpr>>> = vec![vec![None; states.len()]; n_leaves];
        for (leaf_id, row) in utility {
            let leaf = skeleton
                .leaf_id(leaf_id)
                .map_err(|_| Error::validation(format!("utility given for unknown leaf `{leaf_id}`")))?;
            let row = row
                .as_object()
                .ok_or_else(|| Error::parse(format!("utility row `{leaf_id}` must be an object")))?;
            for (state, expr) in row {
                let s = skeleton
                    .state_id(state)
                    .map_err(|_| Error::validation(format!("utility for `{leaf_id}` names unknown state `{state}`")))?;
                let parsed = match expr {
                    Value::String(text) => AffineExpr::parse(text, &params)?,
                    other => AffineExpr::constant(json_rational(other)?, params.len()),
                };
                table[leaf][s] = Some(parsed);
            }
        }
        let mut full = Vec::with_capacity(n_leaves);
        for (leaf, row) in table.into_iter().enumerate() {
            let mut out = Vec::with_capacity(states.len());
            for (s, entry) in row.into_iter().enumerate() {
                out.push(entry.ok_or_else(|| {
                    Error::validation(format!(
                        "missing utility for leaf `{}` in state `{}`",
                        skeleton.leaf_label(leaf),
                        states[s]
                    ))
                })?);
            }
            full.push(out);
        }
        DecisionProblem::new(periods, states, params, &tree, full)
    }

    /// Serializes back to the problem-file schema.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("periods".into(), Value::from(self.periods()));
        obj.insert(
            "states".into(),
            Value::Array(self.states().iter().cloned().map(Value::String).collect()),
        );
        if !self.params().is_empty() {
            obj.insert(
                "params".into(),
                Value::Array(self.params().iter().cloned().map(Value::String).collect()),
            );
        }
        obj.insert("tree".into(), node_to_json(&self.tree_spec()));
        let mut utility = Map::new();
        for leaf in 0..self.n_leaves() {
            let mut row = Map::new();
            for (s, state) in self.states().iter().enumerate() {
                row.insert(
                    state.clone(),
                    Value::String(self.utility_expr(leaf, s).to_text(self.params())),
                );
            }
            utility.insert(self.leaf_label(leaf), Value::Object(row));
        }
        obj.insert("utility".into(), Value::Object(utility));
        Value::Object(obj)
    }
}

fn string_list(value: Option<&Value>, key: &str) -> Result<Option<Vec<String>>> {
    let Some(value) = value else { return Ok(None) };
    let arr = value
        .as_array()
        .ok_or_else(|| Error::parse(format!("`{key}` must be an array of strings")))?;
    arr.iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::parse(format!("`{key}` must be an array of strings")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn parse_node(value: &Value) -> Result<TreeSpec> {
    match value {
        Value::String(s) if s == "leaf" => Ok(TreeSpec::Leaf),
        Value::Object(children) => Ok(TreeSpec::Node(
            children
                .iter()
                .map(|(label, sub)| Ok((label.clone(), parse_node(sub)?)))
                .collect::<Result<Vec<_>>>()?,
        )),
        other => Err(Error::parse(format!("tree node must be an object or \"leaf\", got {other}"))),
    }
}

fn node_to_json(spec: &TreeSpec) -> Value {
    match spec {
        TreeSpec::Leaf => Value::String("leaf".into()),
        TreeSpec::Node(children) => Value::Object(
            children
                .iter()
                .map(|(label, sub)| (label.clone(), node_to_json(sub)))
                .collect(),
        ),
    }
}

fn count_leaves(spec: &TreeSpec) -> usize {
    match spec {
        TreeSpec::Leaf => 1,
        TreeSpec::Node(children) => children.iter().map(|(_, c)| count_leaves(c)).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::{int, ratio};
    use std::collections::BTreeMap;

    const EXAMPLE2: &str = r#"{
        "periods": 2, "states": ["X", "Y"], "params": ["delta"],
        "tree": { "x": "leaf", "y": "leaf", "w": { "x": "leaf", "y": "leaf" } },
        "utility": {
            "x": { "X": 5, "Y": 3 }, "y": { "X": 3, "Y": 5 },
            "w,x": { "X": "5*delta", "Y": "3*delta" },
            "w,y": { "X": "3*delta", "Y": "5*delta" }
        }
    }"#;

    #[test]
    fn loads_parameterized_problem() {
        let p = DecisionProblem::from_json_str(EXAMPLE2).unwrap();
        assert_eq!(p.n_leaves(), 4);
        assert_eq!(p.params(), &["delta".to_string()]);
        let q = p
            .instantiate(&BTreeMap::from([("delta".to_string(), ratio(4, 5))]))
            .unwrap();
        let wx = q.leaf_id("w,x").unwrap();
        assert_eq!(q.utility(wx, 0).unwrap(), int(4));
        assert_eq!(q.utility(wx, 1).unwrap(), ratio(12, 5));
    }

    #[test]
    fn decimal_numbers_are_exact() {
        let text = r#"{"periods":1,"states":["s"],"tree":{"a":"leaf"},"utility":{"a":{"s":0.1}}}"#;
        let p = DecisionProblem::from_json_str(text).unwrap();
        assert_eq!(p.utility(0, 0).unwrap(), ratio(1, 10));
    }

    #[test]
    fn file_errors() {
        let missing = r#"{"periods":1,"states":["s","t"],"tree":{"a":"leaf"},"utility":{"a":{"s":1}}}"#;
        assert!(matches!(DecisionProblem::from_json_str(missing), Err(Error::Validation(_))));
        let unknown_key = r#"{"periods":1,"states":["s"],"tree":{"a":"leaf"},"utility":{"a":{"s":1}},"x":1}"#;
        assert!(matches!(DecisionProblem::from_json_str(unknown_key), Err(Error::Parse(_))));
        let bad_leaf = r#"{"periods":1,"states":["s"],"tree":{"a":"leaf"},"utility":{"a":{"s":1},"b":{"s":1}}}"#;
        assert!(matches!(DecisionProblem::from_json_str(bad_leaf), Err(Error::Validation(_))));
        let reserved = r#"{"periods":1,"states":["s"],"tree":{"_":"leaf"},"utility":{"_":{"s":1}}}"#;
        assert!(matches!(DecisionProblem::from_json_str(reserved), Err(Error::Validation(_))));
        let too_deep = r#"{"periods":1,"states":["s"],"tree":{"a":{"b":"leaf"}},"utility":{"a,b":{"s":1}}}"#;
        assert!(matches!(DecisionProblem::from_json_str(too_deep), Err(Error::Validation(_))));
        assert!(matches!(DecisionProblem::from_json_str("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn serialization_round_trips() {
        let p = DecisionProblem::from_json_str(EXAMPLE2).unwrap();
        let again = DecisionProblem::from_json(&p.to_json()).unwrap();
        assert_eq!(p, again);
    }
}
