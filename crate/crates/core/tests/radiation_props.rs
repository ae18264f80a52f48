mod common;

use common::{random_profile, rel, rng};
use critwave::nonlinearity::sigma4;
use critwave::radiation::*;
use rand::Rng;

#[test]
fn isometry_on_random_profiles() {
    let mut r = rng(11);
    for _ in 0..20 {
        let g = random_profile(&mut r);
        let d = data_from_profile(&g);
        let lhs = data_energy(&d).unwrap();
        let rhs = 2.0 * sigma4() * g.norm_l2().unwrap().powi(2);
        assert!(rel(lhs, rhs) < 1e-7, "{lhs} vs {rhs}");
    }
}

#[test]
fn exterior_energy_identity_holds() {
    let mut r = rng(12);
    for _ in 0..5 {
        let g = random_profile(&mut r);
        let d = data_from_profile(&g);
        for &radius in &[0.5, 1.0, 2.0, 10.0] {
            let a = exterior_energy(&d, radius).unwrap();
            let b = exterior_energy_identity(&g, radius).unwrap();
            assert!(rel(a, b) < 1e-8, "R = {radius}: {a} vs {b}");
        }
    }
}

#[test]
fn round_trip_recovers_profile() {
    let mut r = rng(13);
    for _ in 0..3 {
        let g = random_profile(&mut r);
        let back = profile_from_data(&data_from_profile(&g)).unwrap();
        let (lo, hi) = g.support().unwrap();
        let worst = (0..=400)
            .map(|i| lo + (hi - lo) * i as f64 / 400.0)
            .map(|s| (back.value(s) - g.value(s)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }
}

#[test]
fn declared_support_is_honest() {
    let mut r = rng(14);
    let g = random_profile(&mut r);
    let (lo, hi) = g.support().unwrap();
    for _ in 0..100 {
        let s = if r.gen_bool(0.5) { r.gen_range(hi..hi + 50.0) } else { r.gen_range(lo - 50.0..lo) };
        if s != lo && s != hi {
            assert_eq!(g.value(s), 0.0);
        }
    }
    let cached = g.norm_l2().unwrap();
    let fresh = g.norm_sq_outside(0.0).unwrap().sqrt();
    assert!(cached >= 0.0 && (cached - fresh).abs() < 1e-10);
}

#[test]
fn translation_law() {
    let mut r = rng(15);
    for _ in 0..4 {
        let g = random_profile(&mut r);
        let (a1, a2) = asymptotic_numbers(&g).unwrap();
        for &t0 in &[-3.0, 0.7, 10.0] {
            let (b1, b2) = asymptotic_numbers(&shift_profile(&g, t0).unwrap()).unwrap();
            assert!((b1 - a1).abs() < 1e-10);
            assert!((b2 - (a2 + a1 * t0)).abs() < 1e-10);
        }
        assert_eq!(asymptotic_numbers(&shift_profile(&g, 0.0).unwrap()).unwrap(), (a1, a2));
    }
}

#[test]
fn residue_flow_matches_differences() {
    let mut r = rng(16);
    for _ in 0..4 {
        let g = random_profile(&mut r);
        let gp = g.reflected();
        for &radius in &[0.8, 2.3, 6.0] {
            let (d1, d2) = residue_flow(&g, &gp, radius).unwrap();
            let mut errs = Vec::new();
            for &h in &[1e-2, 5e-3] {
                let a = residues(&g, radius + h).unwrap();
                let b = residues(&g, radius - h).unwrap();
                errs.push((((a.tau1 - b.tau1) / (2.0 * h) - d1).abs(), ((a.tau2 - b.tau2) / (2.0 * h) - d2).abs()));
            }
            for k in 0..2 {
                let (e1, e2) = if k == 0 { (errs[0].0, errs[1].0) } else { (errs[0].1, errs[1].1) };
                assert!(e2 < 1e-10 || e1 / e2 > 3.0, "r = {radius}: {e1} -> {e2}");
            }
        }
    }
}

#[test]
fn positive_propagator_is_positive() {
    let mut r = rng(17);
    for _ in 0..10 {
        let spec = common::random_bump_spec(&mut r, true);
        let shifted = RadiationProfile::from_spec(&spec).unwrap().shifted(-5.0).unwrap();
        let u1 = RadialFunction::closed(move |x| shifted.value(x), &[]);
        for _ in 0..10 {
            let t: f64 = r.gen_range(0.0..6.0);
            let rad: f64 = r.gen_range(t + 1e-3..t + 10.0);
            assert!(positive_propagator(&u1, rad, t).unwrap() >= 0.0);
        }
    }
    assert!(positive_propagator(&RadialFunction::zero(), 0.5, 0.5).is_err());
}

#[test]
fn positive_propagator_matches_free_wave() {
    let u1 = RadialFunction::closed(|x| if (1.0..=2.0).contains(&x) { 1.0 } else { 0.0 }, &[1.0, 2.0]);
    let d = RadialData::new(RadialFunction::zero(), u1.clone(), 0.0, Some(DataDecay::Compact(2.0)));
    let g = profile_from_data(&d).unwrap();
    for &(rad, t) in &[(5.0, 0.5), (1.8, 0.5), (2.5, 1.0), (3.0, 1.5)] {
        let a = positive_propagator(&u1, rad, t).unwrap();
        let b = free_wave(&g, rad, t).unwrap();
        assert!((a - b).abs() < 1e-8, "({rad}, {t}): {a} vs {b}");
    }
}

#[test]
fn ground_state_residues_through_reconstruction() {
    let g = profile_from_data(&RadialData::ground_state(1.0)).unwrap();
    for &radius in &[1.0, 5.0, 20.0] {
        let t = residues(&g, radius).unwrap();
        assert!(t.tau1.abs() < 1e-10);
        assert!((t.tau2 - ground_state_tau2(radius)).abs() < 1e-8);
    }
}

#[test]
fn exterior_data_reconstruction() {
    let g = RadiationProfile::from_spec("bump:0.5:1.5:0.8+bump:-1:0.6:-0.4").unwrap();
    let full = data_from_profile(&g);
    let grid: Vec<f64> = (0..=600).map(|i| 1.0 + i as f64 * 0.005).collect();
    let u0: Vec<f64> = grid.iter().map(|&x| full.u0(x)).collect();
    let u1: Vec<f64> = grid.iter().map(|&x| full.u1(x)).collect();
    let m = g.moments(4.0).unwrap();
    let decay = DataDecay::InverseCube { from: 4.0, u0_coeff: m.1, u1_coeff: -m.0 };
    let sampled = RadialData::sampled(grid, u0, u1, Some(decay)).unwrap();
    let back = profile_from_data(&sampled).unwrap();
    assert!(back.reduced_accuracy);
    let inner = back.inner_moments().unwrap();
    let exact = g.moments(1.0).unwrap();
    assert!((inner.m0 - exact.0).abs() < 1e-8 && (inner.m1 - exact.1).abs() < 1e-8);
    for &s in &[-1.4, -1.2, 1.1, 1.7] {
        assert!((back.value(s) - g.value(s)).abs() < 1e-5, "s = {s}");
    }
    for &radius in &[1.0, 1.5, 3.0] {
        let a = residues(&back, radius).unwrap();
        let b = residues(&g, radius).unwrap();
        assert!((a.tau1 - b.tau1).abs() < 1e-5 && (a.tau2 - b.tau2).abs() < 1e-5);
    }
    assert!(residues(&back, 0.5).is_err());
}
