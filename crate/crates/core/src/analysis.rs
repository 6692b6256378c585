//! Quantities derived from the rationalization tests: the largest
//! rationalizable probability of a sequence, one-parameter identified sets,
//! and risk transforms of the utility table.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::deviation::{dominates_joint, dominates_marginal, dominates_sequence, DeviationRule, DEFAULT_RULE_CAP};
use crate::error::{Error, Result};
use crate::model::rational::{format_rational, Rational};
use crate::model::{DecisionProblem, LeafId};
use crate::rationalize::{Analyzer, Observation};

/// Largest `Σ_ω γ(a, ω)` over all rationalizable joint distributions.
pub fn max_rationalizable_probability(problem: &DecisionProblem, a: LeafId, cap: u64) -> Result<Rational> {
    Ok(Analyzer::with_cap(problem, cap)?.max_marginal(a)?.0)
}

/// One free parameter over `[lo, hi]`, every other parameter pinned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub param: String,
    pub lo: Rational,
    pub hi: Rational,
    pub fixed: BTreeMap<String, Rational>,
}

impl Sweep {
    pub fn new(
        family: &DecisionProblem,
        param: &str,
        lo: Rational,
        hi: Rational,
        fixed: BTreeMap<String, Rational>,
    ) -> Result<Self> {
        if !family.params().iter().any(|p| p == param) {
            return Err(Error::validation(format!("problem has no parameter `{param}`")));
        }
        if fixed.contains_key(param) {
            return Err(Error::validation(format!("parameter `{param}` is both swept and fixed")));
        }
        if lo >= hi {
            return Err(Error::validation(format!("empty range [{lo}, {hi}]")));
        }
        let free: Vec<&String> = family
            .params()
            .iter()
            .filter(|p| p.as_str() != param && !fixed.contains_key(*p))
            .collect();
        if !free.is_empty() {
            return Err(Error::Unsupported(format!(
                "sweeping several parameters at once; fix {free:?} with --param"
            )));
        }
        Ok(Sweep {
            param: param.to_string(),
            lo,
            hi,
            fixed,
        })
    }

    pub fn instantiate(&self, family: &DecisionProblem, value: &Rational) -> Result<DecisionProblem> {
        if value < &self.lo || value > &self.hi {
            return Err(Error::validation(format!(
                "{} = {value} lies outside [{}, {}]",
                self.param, self.lo, self.hi
            )));
        }
        let mut point = self.fixed.clone();
        point.insert(self.param.clone(), value.clone());
        family.instantiate(&point)
    }

    /// `points` equispaced values including both ends.
    pub fn grid(&self, points: usize) -> Vec<Rational> {
        let steps = points.max(2) - 1;
        let width = &self.hi - &self.lo;
        (0..=steps)
            .map(|i| &self.lo + &width * Rational::new(i.into(), steps.into()))
            .collect()
    }

    /// True when the swept parameter never appears in the utility table.
    pub fn is_inert(&self, family: &DecisionProblem) -> bool {
        let idx = family.params().iter().position(|p| *p == self.param).expect("validated");
        family
            .utility_table()
            .iter()
            .flatten()
            .all(|e| e.coefficients[idx].is_zero())
    }
}

/// For each grid point, whether `rule` fails to dominate the observation.
pub fn lambda_d_set(
    family: &DecisionProblem,
    sweep: &Sweep,
    rule: &DeviationRule,
    observation: &Observation,
    grid: &[Rational],
) -> Result<Vec<bool>> {
    grid.iter()
        .map(|value| {
            let p = sweep.instantiate(family, value)?;
            let dominated = match observation {
                Observation::Sequence(a) => dominates_sequence(&p, rule, *a)?,
                Observation::Joint(j) => dominates_joint(&p, rule, j)?,
                Observation::Marginal(m) => dominates_marginal(&p, rule, m)?,
            };
            Ok(!dominated)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    In,
    Out,
    Gap,
}

impl Tag {
    fn as_str(self) -> &'static str {
        match self {
            Tag::In => "in",
            Tag::Out => "out",
            Tag::Gap => "gap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedInterval {
    pub lo: Rational,
    pub hi: Rational,
    pub tag: Tag,
    /// A point of the interval at which the exact test gave `tag`; none for gaps.
    pub sample: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifiedSet {
    pub param: String,
    pub intervals: Vec<TaggedInterval>,
    /// Number of exact rationalizability tests performed.
    pub tests: usize,
}

impl IdentifiedSet {
    pub fn to_json(&self) -> Value {
        json!({
            "param": self.param,
            "intervals": self.intervals.iter().map(|i| {
                let mut v = json!({ "lo": format_rational(&i.lo), "hi": format_rational(&i.hi), "tag": i.tag.as_str() });
                if let Some(s) = &i.sample {
                    v["sample"] = json!(format_rational(s));
                }
                v
            }).collect::<Vec<_>>(),
        })
    }

    /// Tag covering `value`. Gap endpoints were tested, so they report the
    /// neighbouring tag; only interior gap points report `Gap`.
    pub fn tag_at(&self, value: &Rational) -> Option<Tag> {
        let covers = |i: &&TaggedInterval| &i.lo <= value && value <= &i.hi;
        let mut hits = self.intervals.iter().filter(covers);
        let first = hits.next()?;
        if first.tag != Tag::Gap {
            return Some(first.tag);
        }
        Some(hits.next().map_or(Tag::Gap, |i| i.tag))
    }

    /// Gap intervals, where the boundary lies.
    pub fn gaps(&self) -> impl Iterator<Item = &TaggedInterval> {
        self.intervals.iter().filter(|i| i.tag == Tag::Gap)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifyOptions {
    pub grid: usize,
    /// Gap width; defaults to 2⁻¹⁰ of the range.
    pub tol: Option<Rational>,
    pub cap: u64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions {
            grid: 33,
            tol: None,
            cap: DEFAULT_RULE_CAP,
        }
    }
}

/// Parameter values at which `observation` can be rationalized.
///
/// Exact tests run on an equispaced grid; every cell whose endpoints
/// disagree is bisected until the undecided gap is at most `tol` wide.
/// Tags are certified at the sampled points only: a cell whose endpoints
/// agree is reported with their common tag.
pub fn identified_set(
    family: &DecisionProblem,
    sweep: &Sweep,
    observation: &Observation,
    options: &IdentifyOptions,
) -> Result<IdentifiedSet> {
    let tol = options
        .tol
        .clone()
        .unwrap_or_else(|| (&sweep.hi - &sweep.lo) / Rational::from_integer(1024.into()));
    if !tol.is_positive() {
        return Err(Error::validation("tolerance must be positive"));
    }
    let test = |value: &Rational| -> Result<bool> {
        let p = sweep.instantiate(family, value)?;
        Ok(Analyzer::with_cap(&p, options.cap)?.check(observation)?.rationalizable)
    };
    let tag = |inside: bool| if inside { Tag::In } else { Tag::Out };

    if sweep.is_inert(family) {
        let inside = test(&sweep.lo)?;
        return Ok(IdentifiedSet {
            param: sweep.param.clone(),
            intervals: vec![TaggedInterval {
                lo: sweep.lo.clone(),
                hi: sweep.hi.clone(),
                tag: tag(inside),
                sample: Some(sweep.lo.clone()),
            }],
            tests: 1,
        });
    }

    let grid = sweep.grid(options.grid);
    let verdicts: Vec<bool> = grid.par_iter().map(test).collect::<Result<_>>()?;
    let cells: Vec<(Vec<TaggedInterval>, usize)> = (0..grid.len() - 1)
        .into_par_iter()
        .map(|i| -> Result<(Vec<TaggedInterval>, usize)> {
            let (x0, x1) = (&grid[i], &grid[i + 1]);
            let (v0, v1) = (verdicts[i], verdicts[i + 1]);
            if v0 == v1 {
                return Ok((
                    vec![TaggedInterval {
                        lo: x0.clone(),
                        hi: x1.clone(),
                        tag: tag(v0),
                        sample: Some(x0.clone()),
                    }],
                    0,
                ));
            }
            let (mut l, mut r) = (x0.clone(), x1.clone());
            let mut tests = 0;
            while &r - &l > tol {
                let mid = (&l + &r) / Rational::from_integer(2.into());
                tests += 1;
                if test(&mid)? == v0 {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            Ok((
                vec![
                    TaggedInterval {
                        lo: x0.clone(),
                        hi: l.clone(),
                        tag: tag(v0),
                        sample: Some(l.clone()),
                    },
                    TaggedInterval {
                        lo: l,
                        hi: r.clone(),
                        tag: Tag::Gap,
                        sample: None,
                    },
                    TaggedInterval {
                        lo: r.clone(),
                        hi: x1.clone(),
                        tag: tag(v1),
                        sample: Some(r),
                    },
                ],
                tests,
            ))
        })
        .collect::<Result<_>>()?;

    let mut intervals: Vec<TaggedInterval> = Vec::new();
    let mut tests = grid.len();
    for (pieces, n) in cells {
        tests += n;
        for piece in pieces {
            match intervals.last_mut() {
                Some(last) if last.tag == piece.tag && last.tag != Tag::Gap && last.hi == piece.lo => {
                    last.hi = piece.hi;
                }
                _ => intervals.push(piece),
            }
        }
    }
    Ok(IdentifiedSet {
        param: sweep.param.clone(),
        intervals,
        tests,
    })
}

/// Increasing convex piecewise-linear map `f : ℝ → ℝ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearFunction {
    breakpoints: Vec<Rational>,
    /// `slopes[i]` applies left of `breakpoints[i]`; the last one right of the last breakpoint.
    slopes: Vec<Rational>,
    /// Value at the first breakpoint, or at 0 without breakpoints.
    anchor: Rational,
}

impl PiecewiseLinearFunction {
    pub fn new(breakpoints: Vec<Rational>, slopes: Vec<Rational>, anchor: Rational) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::validation("need exactly one more slope than breakpoints"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("breakpoints must be strictly increasing"));
        }
        if slopes.iter().any(|s| !s.is_positive()) {
            return Err(Error::validation("risk transform must be increasing (all slopes > 0)"));
        }
        if slopes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::validation("risk transform must be convex (non-decreasing slopes)"));
        }
        Ok(PiecewiseLinearFunction {
            breakpoints,
            slopes,
            anchor,
        })
    }

    /// `x ↦ slope·x + intercept`.
    pub fn affine(slope: Rational, intercept: Rational) -> Result<Self> {
        PiecewiseLinearFunction::new(Vec::new(), vec![slope], intercept)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let Some(first) = self.breakpoints.first() else {
            return &self.anchor + &self.slopes[0] * x;
        };
        if x <= first {
            return &self.anchor + &self.slopes[0] * (x - first);
        }
        let mut value = self.anchor.clone();
        for (i, w) in self.breakpoints.windows(2).enumerate() {
            if x <= &w[1] {
                return value + &self.slopes[i + 1] * (x - &w[0]);
            }
            value += &self.slopes[i + 1] * (&w[1] - &w[0]);
        }
        let last = self.breakpoints.last().expect("non-empty");
        value + self.slopes.last().expect("non-empty") * (x - last)
    }
}

/// The problem with utilities `f(u(a, ω))`.
pub fn risk_transform(problem: &DecisionProblem, f: &PiecewiseLinearFunction) -> Result<DecisionProblem> {
    problem.map_payoffs(|u| f.eval(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::{int, ratio};
    use crate::model::tests::{example1, example2};
    use crate::model::MarginalDistribution;
    use crate::rationalize::Verdict;

    fn family2() -> DecisionProblem {
        DecisionProblem::from_json_str(include_str!("../examples/example2.json")).unwrap()
    }

    fn family3() -> DecisionProblem {
        DecisionProblem::from_json_str(include_str!("../examples/example3.json")).unwrap()
    }

    fn unit_sweep(family: &DecisionProblem) -> Sweep {
        Sweep::new(family, "delta", int(0), int(1), BTreeMap::new()).unwrap()
    }

    #[test]
    fn example2_probability_curve() {
        for k in [50i64, 60, 70, 75, 79, 80, 81, 85, 90, 95, 100] {
            let delta = ratio(k, 100);
            let expected = if delta >= ratio(4, 5) { int(3) - int(2) / &delta } else { int(0) };
            assert_eq!(max_rationalizable_probability(&example2(delta), 2, DEFAULT_RULE_CAP).unwrap(), expected);
        }
    }

    #[test]
    fn example3_probability() {
        let family = family3();
        for (r, c) in [(int(3), int(2)), (ratio(7, 2), int(2)), (int(5), int(3))] {
            let point = BTreeMap::from([("R".to_string(), r.clone()), ("c".to_string(), c.clone())]);
            let p = family.instantiate(&point).unwrap();
            let ee = p.leaf_id("effort,effort").unwrap();
            assert_eq!(max_rationalizable_probability(&p, ee, DEFAULT_RULE_CAP).unwrap(), (&r - &c) / &c);
        }
    }

    #[test]
    fn lambda_d_examples() {
        let family = family2();
        let sweep = unit_sweep(&family);
        let h = ratio(1, 2);
        let z = int(0);
        let rule = |x_to: usize| {
            let mut k = vec![vec![z.clone(); 4]; 4];
            k[0][x_to] = int(1);
            k[1][1] = int(1);
            k[2] = vec![h.clone(), h.clone(), z.clone(), z.clone()];
            k[3] = vec![h.clone(), h.clone(), z.clone(), z.clone()];
            DeviationRule::new(&family, k).unwrap()
        };
        let grid = [ratio(1, 2), ratio(4, 5), ratio(9, 10)];
        // With x left alone the rule weakly improves every other row.
        let seq = Observation::Sequence(2);
        assert_eq!(lambda_d_set(&family, &sweep, &rule(0), &seq, &grid).unwrap(), vec![false, true, true]);
        // Sending x to y hurts x, so only the marginal reading discriminates.
        let mass = Observation::Marginal(MarginalDistribution::point_mass(&family, 2));
        assert_eq!(lambda_d_set(&family, &sweep, &rule(1), &mass, &grid).unwrap(), vec![false, true, true]);
        let id = DeviationRule::identity(&family);
        assert!(lambda_d_set(&family, &sweep, &id, &seq, &grid).unwrap().into_iter().all(|b| b));

        let mut all_x = vec![vec![z.clone(); 4]; 4];
        for row in &mut all_x {
            row[0] = int(1);
        }
        let all_x = DeviationRule::new(&family, all_x).unwrap();
        assert_eq!(lambda_d_set(&family, &sweep, &all_x, &Observation::Sequence(3), &[int(1)]).unwrap(), vec![true]);
        assert!(lambda_d_set(&family, &sweep, &id, &seq, &[int(2)]).is_err());
    }

    #[test]
    fn identified_set_for_waiting() {
        let family = family2();
        let set = identified_set(&family, &unit_sweep(&family), &Observation::Sequence(2), &IdentifyOptions::default()).unwrap();
        let gaps: Vec<_> = set.gaps().collect();
        assert_eq!(gaps.len(), 1);
        let tol = ratio(1, 1024);
        assert!(gaps[0].lo < ratio(4, 5) && ratio(4, 5) <= gaps[0].hi && &gaps[0].hi - &gaps[0].lo <= tol);
        assert_eq!(set.tag_at(&int(0)), Some(Tag::Out));
        assert_eq!(set.tag_at(&int(1)), Some(Tag::In));
        assert_eq!(set.intervals.len(), 3);
    }

    #[test]
    fn identified_set_for_marginal() {
        let family = family2();
        let sweep = unit_sweep(&family);
        let set_for = |w: Vec<Rational>| {
            let m = MarginalDistribution::new(&family, w).unwrap();
            identified_set(&family, &sweep, &Observation::Marginal(m), &IdentifyOptions::default()).unwrap()
        };
        // Mass 3/4 on wx and the rest on wy: the boundary is 2/(3 - 3/4).
        let set = set_for(vec![int(0), int(0), ratio(3, 4), ratio(1, 4)]);
        let gap = set.gaps().next().unwrap();
        assert!(gap.lo < ratio(8, 9) && ratio(8, 9) <= gap.hi);
        assert_eq!(set.tag_at(&int(1)), Some(Tag::In));
        assert_eq!(set.tag_at(&ratio(7, 8)), Some(Tag::Out));
        // With the rest on x instead, only the undiscounted problem fits.
        let set = set_for(vec![ratio(1, 4), int(0), ratio(3, 4), int(0)]);
        assert_eq!(set.tag_at(&ratio(1023, 1024)), Some(Tag::Out));
        assert_eq!(set.tag_at(&int(1)), Some(Tag::In));
    }

    #[test]
    fn identified_set_for_inert_parameter() {
        let p = DecisionProblem::from_json_str(
            r#"{"periods":1,"states":["s","t"],"params":["k"],"tree":{"a":"leaf","b":"leaf"},
                "utility":{"a":{"s":1,"t":0},"b":{"s":0,"t":1}}}"#,
        )
        .unwrap();
        let sweep = Sweep::new(&p, "k", int(0), int(5), BTreeMap::new()).unwrap();
        let set = identified_set(&p, &sweep, &Observation::Sequence(0), &IdentifyOptions::default()).unwrap();
        assert_eq!(set.tests, 1);
        assert_eq!(set.intervals.len(), 1);
        assert_eq!(set.intervals[0].tag, Tag::In);
        let json = set.to_json();
        assert_eq!(json["intervals"][0]["lo"], "0");
        assert_eq!(json["intervals"][0]["hi"], "5");
    }

    #[test]
    fn sweep_validation() {
        let family = family3();
        assert!(matches!(
            Sweep::new(&family, "R", int(0), int(1), BTreeMap::new()),
            Err(Error::Unsupported(_))
        ));
        assert!(Sweep::new(&family, "R", int(1), int(1), BTreeMap::from([("c".into(), int(1))])).is_err());
        assert!(Sweep::new(&family, "q", int(0), int(1), BTreeMap::new()).is_err());
        let ok = Sweep::new(&family, "R", int(2), int(4), BTreeMap::from([("c".into(), int(2))])).unwrap();
        assert_eq!(ok.grid(5), vec![int(2), ratio(5, 2), int(3), ratio(7, 2), int(4)]);
    }

    #[test]
    fn piecewise_linear_functions() {
        let f = PiecewiseLinearFunction::new(vec![int(0)], vec![int(1), int(2)], int(0)).unwrap();
        assert_eq!(f.eval(&int(-3)), int(-3));
        assert_eq!(f.eval(&int(2)), int(4));
        let g = PiecewiseLinearFunction::new(vec![int(-1), int(1)], vec![ratio(1, 2), int(1), int(3)], int(5)).unwrap();
        assert_eq!(g.eval(&int(-3)), int(4));
        assert_eq!(g.eval(&int(0)), int(6));
        assert_eq!(g.eval(&int(2)), int(10));
        assert!(PiecewiseLinearFunction::new(vec![int(0)], vec![int(2), int(1)], int(0)).is_err());
        assert!(PiecewiseLinearFunction::new(vec![], vec![int(0)], int(0)).is_err());
        assert!(PiecewiseLinearFunction::new(vec![int(1), int(0)], vec![int(1); 3], int(0)).is_err());
    }

    #[test]
    fn risk_transforms() {
        let p = example1();
        let id = PiecewiseLinearFunction::affine(int(1), int(0)).unwrap();
        assert_eq!(risk_transform(&p, &id).unwrap(), p);
        let f = PiecewiseLinearFunction::new(vec![int(0)], vec![int(1), int(2)], int(0)).unwrap();
        let v = risk_transform(&p, &f).unwrap();
        assert_eq!(v.payoffs().unwrap().row(2), &[int(4), int(-2)]);
        assert_eq!((0..3).map(|a| v.utility(a, 0).unwrap()).collect::<Vec<_>>(), vec![int(0), int(-1), int(4)]);

        let affine = PiecewiseLinearFunction::affine(int(2), int(1)).unwrap();
        for q in [example1(), example2(ratio(3, 4)), example2(ratio(9, 10))] {
            let w = risk_transform(&q, &affine).unwrap();
            let (a1, a2) = (Analyzer::new(&q).unwrap(), Analyzer::new(&w).unwrap());
            for leaf in 0..q.n_leaves() {
                let v1: Verdict = a1.rationalize_sequence(leaf).unwrap();
                let v2: Verdict = a2.rationalize_sequence(leaf).unwrap();
                assert_eq!(v1.rationalizable, v2.rationalizable);
                assert_eq!(
                    a1.apparently_dominated(leaf).unwrap().is_some(),
                    a2.apparently_dominated(leaf).unwrap().is_some()
                );
            }
        }
    }
}
