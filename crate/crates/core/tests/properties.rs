//! Property tests across modules on small random problems.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{q, random_information, random_joint, random_marginal, random_problem};
use dynrat::analysis::{risk_transform, PiecewiseLinearFunction};
use dynrat::deviation::{dominates_joint, dominates_marginal, dominates_sequence};
use dynrat::oracle::{optimal_strategy_dp, optimal_value_dp, simulate, strategy_value, verify_witness};
use dynrat::rationalize::{Analyzer, Observation, Witness};

fn instance(seed: u64) -> (ChaCha8Rng, dynrat::model::DecisionProblem) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_problem(&mut rng, 2, 300);
    (rng, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdict_witnesses_verify(seed in any::<u64>()) {
        let (mut rng, p) = instance(seed);
        let an = Analyzer::new(&p).unwrap();
        for a in 0..p.n_leaves() {
            let v = an.rationalize_sequence(a).unwrap();
            prop_assert!(verify_witness(&p, &Observation::Sequence(a), &v).unwrap());
            let (best, joint) = an.max_marginal(a).unwrap();
            prop_assert_eq!(best > q(0, 1), v.rationalizable);
            prop_assert_eq!(joint.mass_on(a), best);
        }
        let joint = random_joint(&mut rng, &p);
        let v = an.check_joint(&joint).unwrap();
        prop_assert!(verify_witness(&p, &Observation::Joint(joint.clone()), &v).unwrap());
        let m = random_marginal(&mut rng, &p);
        let v = an.check_marginal(&m).unwrap();
        prop_assert!(verify_witness(&p, &Observation::Marginal(m), &v).unwrap());
    }

    /// Sequence, joint and marginal data nest: a rule dominating a sequence
    /// dominates the point masses on it.
    #[test]
    fn dominance_notions_nest(seed in any::<u64>()) {
        let (mut rng, p) = instance(seed);
        let an = Analyzer::new(&p).unwrap();
        for a in 0..p.n_leaves() {
            if let Some(rule) = an.truly_dominated(a).unwrap() {
                prop_assert!(dominates_sequence(&p, &rule, a).unwrap());
                let point = dynrat::model::MarginalDistribution::point_mass(&p, a);
                prop_assert!(dominates_marginal(&p, &rule, &point).unwrap());
            }
        }
        let joint = random_joint(&mut rng, &p);
        if let Some(rule) = an.intermediately_dominated(&joint.marginal()).unwrap() {
            prop_assert!(dominates_joint(&p, &rule, &joint).unwrap());
        }
    }

    /// Data generated by an optimal strategy is always rationalizable.
    #[test]
    fn optimal_behaviour_is_rationalizable(seed in any::<u64>()) {
        let (mut rng, p) = instance(seed);
        let info = random_information(&mut rng, &p, 2);
        let s = optimal_strategy_dp(&p, &info).unwrap();
        prop_assert_eq!(strategy_value(&p, &s, &info).unwrap(), optimal_value_dp(&p, &info).unwrap());
        let joint = dynrat::oracle::induced_joint(&p, &s, &info).unwrap();
        let an = Analyzer::new(&p).unwrap();
        let v = an.check_joint(&joint).unwrap();
        prop_assert!(v.rationalizable);
        prop_assert!(matches!(v.witness, Witness::ObedientTriple(_)));
        prop_assert!(an.check_marginal(&joint.marginal()).unwrap().rationalizable);
    }

    #[test]
    fn affine_transforms_preserve_verdicts(seed in any::<u64>(), slope in 1i64..6, shift in -5i64..6) {
        let (_, p) = instance(seed);
        let f = PiecewiseLinearFunction::affine(q(slope, 3), q(shift, 2)).unwrap();
        let fp = risk_transform(&p, &f).unwrap();
        let (a1, a2) = (Analyzer::new(&p).unwrap(), Analyzer::new(&fp).unwrap());
        for a in 0..p.n_leaves() {
            prop_assert_eq!(
                a1.rationalize_sequence(a).unwrap().rationalizable,
                a2.rationalize_sequence(a).unwrap().rationalizable
            );
            prop_assert_eq!(a1.max_marginal(a).unwrap().0, a2.max_marginal(a).unwrap().0);
        }
    }

    #[test]
    fn simulation_depends_only_on_seed(seed in any::<u64>(), sim_seed in any::<u64>()) {
        let (mut rng, p) = instance(seed);
        let info = random_information(&mut rng, &p, 2);
        let s = optimal_strategy_dp(&p, &info).unwrap();
        let x = simulate(&p, &s, &info, 20_000, sim_seed).unwrap();
        let y = simulate(&p, &s, &info, 20_000, sim_seed).unwrap();
        prop_assert_eq!(x, y);
    }
}
