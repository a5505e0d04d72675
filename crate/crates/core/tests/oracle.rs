mod common;

use common::{brute, brute_ball, brute_instance};
use proptest::prelude::*;
use rand::Rng;
use xorsat_core::decimation::{
    rule_tree_marginal, run_decimation, Decimator, InternalVector, OrderingVector, Prob, TreeMarginal, UnitClause,
};
use xorsat_core::gf2::{eliminate, exact_marginal};
use xorsat_core::graph::{BallBuilder, FactorGraph, XorView};
use xorsat_core::instance::{sample_instance, Clause};
use xorsat_core::peeling::{peel, peel_with, PeelOrder};
use xorsat_core::rng::{self, Purpose};
use xorsat_core::Instance;

#[test]
fn brute_force_on_a_hand_example() {
    // x0+x1 = 1, x1+x2 = 0 over 3 variables: solutions 100, 011
    let b = brute(3, &[(vec![0, 1], true), (vec![1, 2], false)]);
    assert_eq!(b.count, 2);
    assert_eq!(b.ones, vec![1, 1, 1]);
    assert_eq!(brute(2, &[(vec![0], true), (vec![0], false)]).count, 0);
}

#[test]
fn gf2_counts_and_marginals_match_enumeration() {
    let mut g = rng::stream(99, Purpose::Misc);
    for trial in 0..150 {
        let k = g.random_range(2..=4);
        let n = g.random_range(k..=16);
        let m = g.random_range(0..=(3 * n / 2));
        let inst = sample_instance(k, n, m, trial).unwrap();
        let b = brute_instance(&inst);
        let e = eliminate(&inst);
        assert_eq!(e.solution_count(), Some(b.count as u128), "trial {trial}");
        for v in 0..n {
            assert_eq!(e.marginal(v).reduced(), b.marginal(v), "trial {trial} var {v}");
            let fixed = match b.marginal(v) {
                (0, 1) => Some(false),
                (1, 1) => Some(true),
                _ => None,
            };
            if b.count > 0 {
                assert_eq!(e.fixed_value(v), fixed);
            }
        }
    }
}

#[test]
fn tree_marginal_rule_matches_enumeration_on_graph_balls() {
    let mut checked = 0;
    for seed in 0..40 {
        let inst = sample_instance(3, 120, 60, seed).unwrap();
        let g = FactorGraph::build(&inst);
        for root in (0..120).step_by(7) {
            let nb = g.neighborhood(root, 4).unwrap();
            if nb.vars.len() > 20 {
                continue;
            }
            let b = brute_ball(&nb);
            let rv = rule_tree_marginal(&nb);
            if b.count == 0 {
                assert!(rv.fallback);
                continue;
            }
            let (num, den) = b.marginal(0);
            assert_eq!(rv.p, Prob::Exact { num, den });
            checked += usize::from(nb.is_tree());
        }
    }
    assert!(checked > 100, "only {checked} tree balls");
}

#[test]
fn tree_marginal_rule_matches_enumeration_on_residual_balls() {
    let mut checked = 0;
    for seed in 0..10 {
        let n = 300;
        let inst = sample_instance(3, n, 240, seed).unwrap();
        let z = OrderingVector::random(n, &mut rng::stream(seed, Purpose::Ordering));
        let u = InternalVector::random(n, &mut rng::stream(seed, Purpose::InternalV));
        let rule = TreeMarginal::default();
        let mut dec = Decimator::new(&inst, &rule, &z).unwrap();
        let mut balls = BallBuilder::new(n, inst.m());
        dec.run_observed(&u, |t, res| {
            if t != n / 3 {
                return;
            }
            for root in (0..n).filter(|&v| res.var_alive(v)).step_by(5) {
                let nb = balls.build(res, root, 4);
                if nb.vars.len() > 20 {
                    continue;
                }
                let b = brute_ball(&nb);
                let rv = rule_tree_marginal(&nb);
                if b.count > 0 {
                    let (num, den) = b.marginal(0);
                    assert_eq!(rv.p, Prob::Exact { num, den });
                    checked += 1;
                }
            }
        })
        .unwrap();
    }
    assert!(checked > 50, "only {checked} residual balls");
}

#[test]
fn exact_marginal_on_isolated_and_forced() {
    let inst = Instance::new(4, 1, vec![Clause::new(vec![2], true).unwrap()]).unwrap();
    assert!(exact_marginal(&inst, 0).unwrap().is_half());
    assert_eq!(exact_marginal(&inst, 2).unwrap().reduced(), (1, 1));
}

#[test]
fn uc_and_marginal_rules_agree_when_uc_fires() {
    // a unit clause makes the exact marginal 0 or 1 as well, unless the
    // ball is contradictory
    let n = 400;
    let inst = sample_instance(3, n, 360, 5).unwrap();
    let z = OrderingVector::random(n, &mut rng::stream(5, Purpose::Ordering));
    let u = InternalVector::random(n, &mut rng::stream(5, Purpose::InternalV));
    let uc = run_decimation(&inst, &UnitClause, &z, &u).unwrap();
    assert!(uc.steps.iter().all(|s| matches!(s.p, Prob::Exact { den: 1 | 2, .. })));
    assert!(uc.steps.iter().filter(|s| !s.free).all(|s| s.bit == (s.p == Prob::ONE)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn peel_orders_agree(seed in 0u64..10_000, n in 10usize..300, r in 0.2f64..1.1) {
        let inst = xorsat_core::instance::sample_with_density(3, n, r, seed).unwrap();
        let a = peel_with(&inst, PeelOrder::LowestIndex);
        let b = peel_with(&inst, PeelOrder::Random(seed));
        let c = peel(&inst);
        prop_assert_eq!(&a.kept, &b.kept);
        prop_assert_eq!(&a.kept, &c.kept);
        prop_assert_eq!(&a.core_clauses, &b.core_clauses);
        prop_assert_eq!(eliminate(&inst).is_consistent(), eliminate(&a.core).is_consistent());
    }

    #[test]
    fn core_solutions_extend(seed in 0u64..10_000, n in 10usize..200) {
        let inst = sample_instance(3, n, (0.85 * n as f64) as usize, seed).unwrap();
        let cr = peel(&inst);
        let e = eliminate(&cr.core);
        if e.is_consistent() {
            let mut g = rng::stream(seed, Purpose::Extension);
            let core_sol = e.sample_solution(&mut g).unwrap();
            let full = cr.extend_core_solution(&inst, &core_sol, &mut g).unwrap();
            prop_assert!(inst.is_satisfied_by(&full));
            prop_assert_eq!(cr.project(&full).unwrap(), core_sol);
        }
    }

    #[test]
    fn decimation_is_deterministic_and_within_influence(seed in 0u64..10_000, j in 0usize..150) {
        let n = 150;
        let inst = sample_instance(3, n, 135, seed).unwrap();
        let z = OrderingVector::random(n, &mut rng::stream(seed, Purpose::Ordering));
        let u = InternalVector::random(n, &mut rng::stream(seed, Purpose::InternalV));
        let mut u2 = u.as_slice().to_vec();
        u2[j] = rng::stream(seed, Purpose::InternalW).random();
        let u2 = InternalVector::new(u2).unwrap();
        let g = FactorGraph::build(&inst);
        for rule in [&UnitClause as &dyn xorsat_core::decimation::LocalRule, &TreeMarginal::default()] {
            let a = run_decimation(&inst, rule, &z, &u).unwrap();
            let again = run_decimation(&inst, rule, &z, &u).unwrap();
            prop_assert_eq!(&a.steps, &again.steps);
            let b = run_decimation(&inst, rule, &z, &u2).unwrap();
            let ir = g.influence_range(z.as_slice(), j, rule.radius()).unwrap();
            for v in a.output.diff(&b.output).unwrap() {
                prop_assert!(ir.binary_search(&v).is_ok());
            }
        }
    }
}
