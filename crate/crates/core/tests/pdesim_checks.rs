use critwave::nonlinearity::{critical_power, GroundState};
use critwave::pdesim::*;
use critwave::radiation::{free_wave, nonlinear_profile_shift, RadialData, RadialFunction, RadiationProfile, SourceSupport};

fn bump_wave() -> RadiationProfile {
    RadiationProfile::from_spec("bump:-3:1").unwrap()
}

fn max_error_vs_free_wave(g: &RadiationProfile, dr: f64, cfl: f64, t: f64) -> f64 {
    let (data, boundary) = free_wave_setup(g);
    let cfg = SimConfig::new(1.0, 9.0, dr, t).linear().with_cfl(cfl).with_boundary(boundary);
    let tr = simulate(&data, &cfg).unwrap();
    let k = tr.len() - 1;
    let u = tr.u(k);
    tr.r.iter()
        .zip(&u)
        .step_by(((0.04 / dr).round() as usize).max(1))
        .map(|(&r, &v)| (v - free_wave(g, r, tr.times[k]).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn second_order_convergence() {
    let g = bump_wave();
    for cfl in [1.0, 0.5] {
        let e1 = max_error_vs_free_wave(&g, 0.04, cfl, 2.0);
        let e2 = max_error_vs_free_wave(&g, 0.02, cfl, 2.0);
        let e3 = max_error_vs_free_wave(&g, 0.01, cfl, 2.0);
        let (f1, f2) = (e1 / e2, e2 / e3);
        assert!((3.5..=4.5).contains(&f2), "cfl {cfl}: errors {e1:e} {e2:e} {e3:e}, factors {f1} {f2}");
    }
}

#[test]
fn ground_state_is_stationary() {
    let (data, boundary) = ground_state_setup(1.0);
    let cfg = SimConfig::new(0.5, 10.5, 0.01, 5.0).with_boundary(boundary).with_save_every(100);
    let tr = simulate(&data, &cfg).unwrap();
    let w = GroundState::default();
    let e0 = energy(&tr, 0.0, 0.5).unwrap();
    for k in 0..tr.len() {
        let u = tr.u(k);
        let ut = tr.u_t(k);
        let dev = tr.r.iter().zip(&u).map(|(&r, &v)| (v - w.value(r)).abs()).fold(0.0, f64::max);
        let vel = ut.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(dev < 1e-3 && vel < 1e-3, "t = {}: |u - W| = {dev:e}, |u_t| = {vel:e}", tr.times[k]);
        let e = energy(&tr, tr.times[k], 0.5).unwrap();
        assert!((e - e0).abs() < 1e-3 * e0.abs(), "energy drift {:e}", e - e0);
    }
}

#[test]
fn finite_speed_is_exact() {
    let a = 3.0;
    let d = RadialData::new(
        RadialFunction::closed(move |r| if r < a { 0.05 * (a - r).powi(3) * (r - 1.0) } else { 0.0 }, &[a]),
        RadialFunction::closed(move |r| if r < a { 0.1 * (a - r).powi(2) } else { 0.0 }, &[a]),
        0.0,
        None,
    );
    let cfg = SimConfig::new(1.0, 12.0, 0.01, 4.0);
    let tr = simulate(&d, &cfg).unwrap();
    for k in 0..tr.len() {
        let t = tr.times[k];
        for (i, &r) in tr.r.iter().enumerate() {
            if r > a + t + 2.0 * cfg.dr {
                assert_eq!(tr.w[k][i], 0.0, "nonzero at r = {r}, t = {t}");
            }
        }
    }
}

#[test]
fn odd_symmetry_is_exact() {
    let d = RadialData::new(
        RadialFunction::zero(),
        RadialFunction::closed(|r| 3.0 * (-(r - 3.0) * (r - 3.0)).exp(), &[]),
        0.0,
        None,
    );
    let cfg = SimConfig::new(1.0, 8.0, 0.02, 1.5).with_cfl(0.8);
    let fwd = simulate(&d, &cfg).unwrap();
    let bwd = simulate_backward(&d, &cfg).unwrap();
    assert_eq!(fwd.len(), bwd.len());
    for k in 0..fwd.len() {
        assert_eq!(fwd.times[k], -bwd.times[k]);
        for i in 0..fwd.r.len() {
            assert_eq!(fwd.w[k][i], -bwd.w[k][i]);
        }
    }
}

fn characteristic_gap(dr: f64) -> f64 {
    let d = RadialData::new(
        RadialFunction::closed(|r| 0.3 * (-(r - 2.5) * (r - 2.5) * 2.0).exp(), &[]),
        RadialFunction::closed(|r| 0.2 * (-(r - 2.0) * (r - 2.0)).exp(), &[]),
        0.0,
        None,
    );
    let cfg = SimConfig::new(0.5, 12.5, dr, 3.0);
    let tr = simulate(&d, &cfg).unwrap();
    let (lhs, rhs) = characteristic_integral(&tr, 4.0).unwrap();
    assert!(lhs.abs() > 1e-3);
    (lhs - rhs).abs()
}

#[test]
fn characteristic_identity_second_order() {
    let e1 = characteristic_gap(0.02);
    let e2 = characteristic_gap(0.01);
    assert!(e2 < 1e-3, "gap {e2:e}");
    let f = e1 / e2;
    assert!((3.0..=5.0).contains(&f), "gaps {e1:e} {e2:e}");
}

fn virial_gap(dr: f64) -> f64 {
    let g = bump_wave();
    let (data, boundary) = free_wave_setup(&g);
    let cfg = SimConfig::new(1.0, 9.0, dr, 1.0).linear().with_cfl(0.5).with_boundary(boundary);
    let tr = simulate(&data, &cfg).unwrap();
    let dt = cfg.dt();
    let t = 0.5;
    let k = tr.index_of(t).unwrap();
    let j: Vec<f64> = (k - 1..=k + 1).map(|m| virial(&tr, tr.times[m], 2.0).unwrap().0).collect();
    let (_, jp, jpp) = virial(&tr, t, 2.0).unwrap();
    let jp_fd = (j[2] - j[0]) / (2.0 * dt);
    let jpp_fd = (j[2] - 2.0 * j[1] + j[0]) / (dt * dt);
    assert!(jpp.abs() > 1e-3);
    (jpp - jpp_fd).abs().max((jp - jp_fd).abs())
}

#[test]
fn virial_identity_second_order() {
    let e1 = virial_gap(0.02);
    let e2 = virial_gap(0.01);
    assert!(e1 / e2 > 3.0, "gaps {e1:e} {e2:e}");
}

fn ground_state_virial(dr: f64) -> (f64, f64, f64) {
    let (data, boundary) = ground_state_setup(1.0);
    let cfg = SimConfig::new(0.5, 10.5, dr, 1.0).with_boundary(boundary);
    let tr = simulate(&data, &cfg).unwrap();
    let (j0, _, _) = virial(&tr, 0.0, 2.0).unwrap();
    let (j1, jp, jpp) = virial(&tr, 1.0, 2.0).unwrap();
    ((j1 - j0).abs() / j0, jp.abs(), jpp.abs())
}

#[test]
fn ground_state_virial_is_flat() {
    let coarse = ground_state_virial(0.02);
    let fine = ground_state_virial(0.01);
    assert!(fine.0 < 1e-5 && fine.1 < 1e-2 && fine.2 < 1e-2, "{fine:?}");
    assert!(coarse.1 / fine.1 > 3.0 && coarse.2 / fine.2 > 3.0, "{coarse:?} {fine:?}");
}

#[test]
fn self_similar_exterior_solution() {
    let nu = 0.8;
    let (data, boundary, profile) = self_similar_setup(nu).unwrap();
    let mut errs = Vec::new();
    for dr in [0.02, 0.01] {
        let cfg = SimConfig::new(1.0, 3.0, dr, 0.5).with_boundary(boundary.clone());
        let tr = simulate(&data, &cfg).unwrap();
        let k = tr.len() - 1;
        let t = tr.times[k];
        let u = tr.u(k);
        let err = tr
            .r
            .iter()
            .zip(&u)
            .map(|(&r, &v)| (v - r.powf(-1.5) * profile.phi_at(t / r).unwrap()).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] < 1e-4, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn linear_extraction_recovers_profile() {
    let g = bump_wave();
    let (data, _) = free_wave_setup(&g);
    let cfg = SimConfig::new(1.0, 41.0, 0.02, 18.0).linear().with_save_every(10);
    let tr = simulate(&data, &cfg).unwrap();
    for s in [2.5, 3.0, 3.5] {
        let got = extract_outgoing(&tr, s).unwrap();
        let want = g.value(-s);
        assert!((got - want).abs() < 2e-3, "s = {s}: {got} vs {want}");
    }
    let short = SimConfig::new(1.0, 3.04, 0.02, 1.0).linear();
    let tr = simulate(&data, &short).unwrap();
    assert!(matches!(extract_outgoing(&tr, 3.0), Err(SimError::InsufficientCone { .. })));
}

#[test]
fn perturbative_profile_shift() {
    let eps = 1e-2;
    let g = RadiationProfile::from_spec(&format!("wavelet:-3:1:{eps}")).unwrap();
    let (data, _) = free_wave_setup(&g);
    let t_final = 60.0;
    let base = SimConfig::new(1.0, 2.0 * t_final + 6.0, 0.02, t_final).with_save_every(20);
    let nonlinear = simulate(&data, &base).unwrap();
    let linear = simulate(&data, &base.clone().linear()).unwrap();
    let source = |t: f64, r: f64| critical_power(free_wave(&g, r, t).unwrap());
    for s in [2.5, 3.0, 3.5] {
        let sim = extract_outgoing(&nonlinear, s).unwrap() - extract_outgoing(&linear, s).unwrap();
        let shift = nonlinear_profile_shift(source, SourceSupport::Band { half_width: 4.0, decay: 14.0 / 3.0 }, s, 1e-9).unwrap();
        assert!(shift.abs() > 0.0);
        assert!((sim - shift).abs() < 0.05 * shift.abs(), "s = {s}: simulated {sim:e}, predicted {shift:e}");
    }
}
