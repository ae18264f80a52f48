use critwave::nonlinearity::{g_function, GConstants};
use critwave::profiles::{ProfileOptions, SelfSimilarProfile};
use critwave::quadrature::Quadrature;
use critwave::verify::*;

fn table() -> Table1 {
    build_table1(DEFAULT_TOL).unwrap()
}

#[test]
fn table_matches_reference_cells() {
    let t = table();
    assert_eq!(t.rows.len(), 16);
    for (row, reference) in t.rows.iter().zip(REFERENCE_ROWS.iter()) {
        for (a, b) in row.cells().iter().zip(reference) {
            assert!((a - b).abs() < TABLE_TOL, "row {}: {a} vs {b}", row.k);
        }
    }
    let r8 = &t.rows[7];
    assert!((r8.y_k - 0.504328).abs() < 5e-6);
    assert!((r8.lambda_k - 1.526275).abs() < 5e-6);
    assert!((r8.min_g - 1.0).abs() < 5e-7);
    assert!((r8.product - 1.683491).abs() < 5e-6);
    assert!((r8.contribution - 0.078209).abs() < 5e-6);
}

#[test]
fn table_footer() {
    let s = table().summary;
    assert!((s.sup_phi - 1.860262).abs() < 5e-6);
    assert!((s.y0 - 0.964141).abs() < 5e-6);
    assert!((s.kappa0 - 0.018257).abs() < 5e-6);
    assert!((s.g_minus - 0.535522).abs() < 5e-6);
    assert!((s.total - 0.792065).abs() < 5e-6);
}

#[test]
fn table_internal_consistency() {
    let t = table();
    let z0 = GConstants::new().z0;
    assert_eq!(t.rows[0].z_hi, z0);
    assert_eq!(t.rows[0].contribution, 0.0);
    for r in &t.rows[1..] {
        assert!((r.z_hi - r.z_lo - 0.1).abs() < 1e-12);
    }
    // Telescoping product and the total, rebuilt from the row data only.
    let mut p = 1.0;
    let mut total = 0.0;
    for r in &t.rows {
        let gamma = ((2.0 * r.lambda_k - r.z_hi) / (2.0 * r.lambda_k - r.z_lo)).powi(2);
        assert!(gamma < 1.0);
        let next = p / gamma.sqrt();
        assert!((next - r.product).abs() < 1e-12);
        total += g_function(r.z_lo).min(g_function(r.z_hi)) * (next - p);
        p = next;
    }
    assert!((total - t.summary.total).abs() < 1e-12);
    let kappa = (1.0 - t.summary.y0) / (1.0 + t.summary.y0);
    assert_eq!(kappa, t.summary.kappa0);
}

#[test]
fn main_inequality_margin() {
    let item = check_main_inequality(&table());
    assert!(item.pass);
    assert!((item.computed - (REFERENCE_TOTAL - REFERENCE_G_MINUS)).abs() < 1e-4);
    assert!(item.computed > 0.25);
}

#[test]
fn upper_integral_value_and_monotonicity() {
    let item = check_upper_integral(NU0, DEFAULT_TOL).unwrap();
    assert!(item.pass, "{item:?}");
    let p = SelfSimilarProfile::solve(NU0, &ProfileOptions::default()).unwrap();
    let quad = Quadrature::new(1e-10);
    let capped = upper_integral(&p, &quad, true).unwrap();
    let raw = upper_integral(&p, &quad, false).unwrap();
    assert!(capped > raw, "capping raises g on the decreasing branch: {capped} vs {raw}");
    let g = GConstants::new();
    assert!((g_function(g.z_max) - 1.018080).abs() < 1e-6);
}

#[test]
fn c1_and_neutralization() {
    let t = table();
    let items = check_c1(&t);
    assert!(items.iter().all(|i| i.pass), "{items:?}");
    assert!((c1_constant(&t) - 0.184221).abs() < 5e-4);
    let head: f64 = REFERENCE_ROWS[..11].iter().map(|r| r[4]).sum();
    assert!((head - 0.616551).abs() < 1e-6);
    let m = neutralization_margin(&t);
    assert!((m - 2.0 * (head - REFERENCE_G_MINUS)).abs() < 1e-4);
    // The lower sub-table restarted at row 12 from the reference products.
    let p11 = REFERENCE_ROWS[10][3];
    let c1_ref: f64 = (11..16).map(|k| 2.0 * REFERENCE_ROWS[k][2] * (REFERENCE_ROWS[k][3] - REFERENCE_ROWS[k - 1][3]) / p11).sum();
    assert!((c1_ref - 0.184221).abs() < 2e-5, "{c1_ref}");
}

#[test]
fn push_up() {
    let items = check_pushup(DEFAULT_TOL).unwrap();
    assert!(items.iter().all(|i| i.pass), "{items:?}");
    let (ode, closed) = push_up_integrals(DEFAULT_TOL).unwrap();
    assert!((ode - closed).abs() < 1e-8);
    assert!((99.0 / 50.0 * ode - 1.19702).abs() < 1e-4);
}

#[test]
fn full_report_passes_and_is_deterministic() {
    let cfg = VerifyConfig::default();
    let a = run_all(&cfg);
    assert!(a.overall, "{}", a.to_json());
    assert!(a.items.len() >= 12);
    let b = run_all(&VerifyConfig { jobs: 1, ..cfg });
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn loose_ode_tolerance_still_passes() {
    let report = run_all(&VerifyConfig { tol: 1e-2, ..Default::default() });
    assert!(report.overall, "{}", report.to_json());
}

#[test]
fn wrong_nu0_fails() {
    let report = run_all(&VerifyConfig { nu0: 1.0, ..Default::default() });
    assert!(!report.overall);
    let json = report.to_json();
    assert!(json.contains("\"overall\": false"));
}

#[test]
fn perturbed_nu0_is_recomputed() {
    let t = build_table1_for(1.80, DEFAULT_TOL).unwrap();
    assert_eq!(t.summary.nu0, 1.80);
    assert!(t.summary.sup_phi < table().summary.sup_phi);
    let item = check_main_inequality(&t);
    assert_eq!(item.pass, t.summary.total > t.summary.g_minus);
}

#[test]
fn csv_layout() {
    let mut buf = Vec::new();
    write_table1_csv(&table(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,range,y_k,lambda_k,min_g,product,contribution");
    assert_eq!(lines.len(), 17);
    assert!(lines[8].starts_with("8,0.9-1,0.5043"), "{}", lines[8]);
}
