//! Finite-n simulations checked against the closed-form predictions.

use xorsat_core::decimation::{Decimator, InternalVector, OrderingVector, UnitClause};
use xorsat_core::rng::{self, trial_seed, Purpose};
use xorsat_core::{gf2, instance, peeling, theory};

#[test]
fn residual_widths_follow_binomial_thinning() {
    let (k, r, n) = (3, 0.9, 100_000);
    let inst = instance::sample_with_density(k, n, r, 11).unwrap();
    let z = OrderingVector::random(n, &mut rng::stream(11, Purpose::Ordering));
    let u = InternalVector::random(n, &mut rng::stream(11, Purpose::InternalV));
    let mut d = Decimator::new(&inst, &UnitClause, &z).unwrap();
    for x in [0.25, 0.5, 0.75] {
        let at = (x * n as f64) as usize;
        let mut hist = Vec::new();
        d.run_observed(&u, |t, res| {
            if t == at {
                hist = res.width_histogram(k);
            }
        })
        .unwrap();
        let (_, y) = theory::degree_profile_prediction(k, r, x, 0);
        for i in 1..=k {
            let got = hist[i] as f64 / n as f64;
            assert!((got - y[i]).abs() < 0.01, "x={x} width {i}: {got} vs {}", y[i]);
        }
    }
}

fn satisfiable_via_core(k: usize, n: usize, r: f64, seed: u64) -> bool {
    let inst = instance::sample_with_density(k, n, r, seed).unwrap();
    let cr = peeling::peel(&inst);
    gf2::eliminate(&cr.core).is_consistent()
}

#[test]
fn satisfiability_transition_brackets_estimate() {
    let (k, n, trials) = (3, 2000, 40);
    let rs = theory::r_sat_estimate(k);
    let frac = |r: f64| {
        let sat = (0..trials)
            .filter(|&t| satisfiable_via_core(k, n, r, trial_seed(101, t as u64)))
            .count();
        sat as f64 / trials as f64
    };
    let below = frac(rs - 0.04);
    let above = frac(rs + 0.04);
    assert!(below >= 0.9, "P(sat) at r_sat - 0.04 = {below}");
    assert!(above <= 0.1, "P(sat) at r_sat + 0.04 = {above}");
}

#[test]
fn unit_clause_freeness_at_k4() {
    let (k, r, n, trials) = (4, 0.7, 20_000, 4);
    let mut total = 0.0;
    for t in 0..trials {
        let s = trial_seed(5, t);
        let inst = instance::sample_with_density(k, n, r, s).unwrap();
        let z = OrderingVector::random(n, &mut rng::stream(s, Purpose::Ordering));
        let u = InternalVector::random(n, &mut rng::stream(s, Purpose::InternalV));
        let tr = Decimator::new(&inst, &UnitClause, &z).unwrap().run(&u).unwrap();
        total += tr.free_fraction();
    }
    let got = total / trials as f64;
    let want = theory::w1(k, r);
    assert!((got - want).abs() < 0.01, "free fraction {got} vs w1 {want}");
}

#[test]
fn core_size_tracks_v_core_at_k5() {
    let (k, r, n) = (5, 0.8, 50_000);
    let inst = instance::sample_with_density(k, n, r, 21).unwrap();
    let cr = peeling::peel(&inst);
    let s = cr.stats(n);
    assert!((s.core_var_fraction - theory::v_core(k, r)).abs() < 0.01);
    assert!((s.core_clause_fraction - theory::core_clause_fraction(k, r)).abs() < 0.01);
}
