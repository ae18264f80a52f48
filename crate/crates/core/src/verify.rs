//! The verified numerical pipeline behind the positivity argument: Table 1,
//! the main inequality, the upper integral, `C₁`, the push-up constant, `ν₂`
//! and the closed-form landmarks of `g`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::format::sig12;
use crate::nonlinearity::{g_function, GConstants};
use crate::profiles::{find_nu2_in, LinearProfile, ProfileError, ProfileOptions, SelfSimilarProfile, DEFAULT_DRIFT_TOL};
use crate::quadrature::{QuadError, Quadrature};

pub const NU0: f64 = 1.86;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const QUAD_TOL: f64 = 1e-10;
/// Absolute tolerance for every table cell and footer constant.
pub const TABLE_TOL: f64 = 5e-5;
pub const ROWS: usize = 16;
/// First row of the lower sub-table used for `C₁`.
pub const C1_FIRST_ROW: usize = 12;

/// Reference rows: `(y_k, λ_k, min g, product, contribution)`.
pub const REFERENCE_ROWS: [[f64; 5]; ROWS] = [
    [0.928249, 1.349242, 0.000000, 1.080450, 0.000000],
    [0.874605, 1.368272, 0.205806, 1.175515, 0.019565],
    [0.814979, 1.390407, 0.424393, 1.267293, 0.038950],
    [0.752686, 1.414727, 0.607370, 1.355949, 0.053847],
    [0.689656, 1.440692, 0.755546, 1.441694, 0.064784],
    [0.626943, 1.468010, 0.869772, 1.524739, 0.072231],
    [0.565085, 1.496548, 0.950941, 1.605282, 0.076591],
    [0.504328, 1.526275, 1.000000, 1.683491, 0.078209],
    [0.444745, 1.557229, 1.005877, 1.759513, 0.076469],
    [0.386316, 1.589504, 0.964927, 1.833473, 0.071366],
    [0.328960, 1.623233, 0.896364, 1.905474, 0.064539],
    [0.272566, 1.658595, 0.801575, 1.975601, 0.056212],
    [0.217003, 1.695814, 0.682111, 2.043922, 0.046603],
    [0.162126, 1.735163, 0.539751, 2.110492, 0.035931],
    [0.107779, 1.776980, 0.376608, 2.175352, 0.024426],
    [0.053795, 1.821679, 0.195358, 2.238527, 0.012342],
];

pub const REFERENCE_SUP_PHI: f64 = 1.860262;
pub const REFERENCE_Y0: f64 = 0.964141;
pub const REFERENCE_KAPPA0: f64 = 0.018257;
pub const REFERENCE_G_MINUS: f64 = 0.535522;
pub const REFERENCE_TOTAL: f64 = 0.792065;
pub const REFERENCE_UPPER_INTEGRAL: f64 = 1.85024;
pub const REFERENCE_C1: f64 = 0.184221;
pub const REFERENCE_I_STAR: f64 = 0.604556;
pub const REFERENCE_NU2: f64 = 1.575;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("ν₀ must be positive, got {0}")]
    InvalidSlope(f64),
}

/// `z_k`: `2^{3/4}` for `k = 0`, then `1.6, 1.5, …, 0.1`.
pub fn z_level(k: usize) -> f64 {
    if k == 0 {
        GConstants::new().z0
    } else {
        (17 - k as i32) as f64 / 10.0
    }
}

/// `g(z_k)`, with `g(z_0) = 0` exactly.
pub fn g_level(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        g_function(z_level(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub k: usize,
    pub z_lo: f64,
    pub z_hi: f64,
    pub y_k: f64,
    pub lambda_k: f64,
    pub min_g: f64,
    pub product: f64,
    pub contribution: f64,
}

impl Table1Row {
    pub fn cells(&self) -> [f64; 5] {
        [self.y_k, self.lambda_k, self.min_g, self.product, self.contribution]
    }

    /// Factor `(2λ_k - z_k) / (2λ_k - z_{k-1})`, i.e. `γ_k^{-1/2}`.
    pub fn ratio(&self) -> f64 {
        (2.0 * self.lambda_k - self.z_lo) / (2.0 * self.lambda_k - self.z_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Summary {
    pub nu0: f64,
    pub sup_phi: f64,
    pub y0: f64,
    pub kappa0: f64,
    pub g_minus: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
    pub summary: Table1Summary,
}

fn profile_options(tol: f64) -> ProfileOptions {
    ProfileOptions { drift_tol: DEFAULT_DRIFT_TOL.max(tol), ..ProfileOptions::with_tol(tol) }
}

fn check_inputs(nu0: f64, tol: f64) -> Result<(), VerifyError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(VerifyError::InvalidTolerance(tol));
    }
    if !(nu0 > 0.0 && nu0.is_finite()) {
        return Err(VerifyError::InvalidSlope(nu0));
    }
    Ok(())
}

pub fn build_table1(tol: f64) -> Result<Table1, VerifyError> {
    build_table1_for(NU0, tol)
}

pub fn build_table1_for(nu0: f64, tol: f64) -> Result<Table1, VerifyError> {
    check_inputs(nu0, tol)?;
    let profile = SelfSimilarProfile::solve(nu0, &profile_options(tol))?;
    table_from_profile(&profile)
}

fn table_from_profile(profile: &SelfSimilarProfile) -> Result<Table1, VerifyError> {
    let nu0 = profile.nu;
    let sup_phi = profile.sup_phi;
    let g_minus = -g_function(sup_phi);
    let y0 = profile.inverse_phi(z_level(0))?;
    let kappa0 = (1.0 - y0) / (1.0 + y0);
    let mut rows = Vec::with_capacity(ROWS);
    let mut product = 1.0;
    let mut total = 0.0;
    for k in 1..=ROWS {
        let (z_lo, z_hi) = (z_level(k), z_level(k - 1));
        let y_k = profile.inverse_phi(z_lo)?;
        let lambda_k = (1.0 + y_k).powf(-0.5) * nu0 + kappa0 * g_minus;
        let min_g = g_level(k).min(g_level(k - 1));
        let next = product * (2.0 * lambda_k - z_lo) / (2.0 * lambda_k - z_hi);
        let contribution = min_g * (next - product);
        rows.push(Table1Row { k, z_lo, z_hi, y_k, lambda_k, min_g, product: next, contribution });
        product = next;
        total += contribution;
    }
    Ok(Table1 { rows, summary: Table1Summary { nu0, sup_phi, y0, kappa0, g_minus, total } })
}

/// CSV with columns `k,range,y_k,lambda_k,min_g,product,contribution`.
pub fn write_table1_csv<W: Write>(table: &Table1, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "range", "y_k", "lambda_k", "min_g", "product", "contribution"])?;
    for r in &table.rows {
        w.write_record([
            r.k.to_string(),
            format!("{}-{}", sig12(r.z_lo), sig12(r.z_hi)),
            sig12(r.y_k),
            sig12(r.lambda_k),
            sig12(r.min_g),
            sig12(r.product),
            sig12(r.contribution),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Comparison target of a report item.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Target {
    Value(f64),
    Predicate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub computed: f64,
    pub target: Target,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckItem {
    pub fn near(name: &str, computed: f64, target: f64, tolerance: f64) -> Self {
        CheckItem {
            name: name.into(),
            computed,
            target: Target::Value(target),
            tolerance,
            pass: (computed - target).abs() <= tolerance,
            error: None,
        }
    }

    pub fn predicate(name: &str, computed: f64, description: &str, pass: bool) -> Self {
        CheckItem { name: name.into(), computed, target: Target::Predicate(description.into()), tolerance: 0.0, pass, error: None }
    }

    fn failed(name: &str, target: Target, tolerance: f64, err: &VerifyError) -> Self {
        CheckItem { name: name.into(), computed: f64::NAN, target, tolerance, pass: false, error: Some(err.to_string()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub items: Vec<CheckItem>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(items: Vec<CheckItem>) -> Self {
        let overall = !items.is_empty() && items.iter().all(|i| i.pass);
        VerificationReport { items, overall }
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// `(margin, pass)` for `Σ_k contribution_k > g_-`.
pub fn check_main_inequality(table: &Table1) -> CheckItem {
    let margin = table.summary.total - table.summary.g_minus;
    CheckItem::predicate("main_inequality_margin", margin, "total - g_minus > 0", margin > 0.0)
}

/// `∫₀¹ g(min{φ_{ν₀}(y), z_max}) (1 - y)^{-1/2} dy`.
pub fn upper_integral(profile: &SelfSimilarProfile, quad: &Quadrature, capped: bool) -> Result<f64, VerifyError> {
    let z_max = GConstants::new().z_max;
    let y_end = profile.y_max().min(1.0);
    let f = |y: f64| {
        let phi = profile.phi_at(y.min(y_end)).unwrap_or(f64::NAN);
        g_function(if capped { phi.min(z_max) } else { phi })
    };
    let mut breaks = Vec::new();
    for w in profile.grid.windows(2).zip(profile.phi.windows(2)) {
        let ((ya, yb), (pa, pb)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
        if (pa - z_max) * (pb - z_max) < 0.0 {
            breaks.push(bisect_level(profile, z_max, ya, yb));
        }
    }
    Ok(quad.sqrt_singular_with_breaks(&f, 0.0, 1.0, &breaks)?)
}

fn bisect_level(profile: &SelfSimilarProfile, z: f64, mut a: f64, mut b: f64) -> f64 {
    let sign_a = profile.phi_at(a).unwrap_or(0.0) > z;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if (profile.phi_at(m).unwrap_or(0.0) > z) == sign_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn check_upper_integral(nu0: f64, tol: f64) -> Result<CheckItem, VerifyError> {
    check_inputs(nu0, tol)?;
    let profile = SelfSimilarProfile::solve(nu0, &profile_options(tol))?;
    let value = upper_integral(&profile, &Quadrature::new(QUAD_TOL), true)?;
    let mut item = CheckItem::near("upper_integral", value, REFERENCE_UPPER_INTEGRAL, 1e-3);
    item.pass &= value < nu0;
    Ok(item)
}

/// `C₁ = Σ_{k=12}^{16} 2 m_k (P_k - P_{k-1})` with `P_k` the product restarted at row 12.
pub fn c1_constant(table: &Table1) -> f64 {
    let mut p = 1.0;
    let mut c1 = 0.0;
    for row in &table.rows[C1_FIRST_ROW - 1..] {
        let next = p * row.ratio();
        c1 += 2.0 * row.min_g * (next - p);
        p = next;
    }
    c1
}

/// `Σ_{k≤11} 2 m_k (∏^k - ∏^{k-1}) - 2 g_-`.
pub fn neutralization_margin(table: &Table1) -> f64 {
    let head: f64 = table.rows[..C1_FIRST_ROW - 1].iter().map(|r| r.contribution).sum();
    2.0 * head - 2.0 * table.summary.g_minus
}

/// Items: `C1`, `C1/3 > 11 ν₁ / 10` and the neutralization condition.
pub fn check_c1(table: &Table1) -> Vec<CheckItem> {
    let c1 = c1_constant(table);
    let third = c1 / 3.0;
    let threshold = 1.1 * crate::profiles::NU1;
    let neutral = neutralization_margin(table);
    vec![
        CheckItem::near("C1", c1, REFERENCE_C1, 5e-4),
        CheckItem::predicate("C1_over_3", third, "C1 / 3 > 0.055", third > threshold),
        CheckItem::predicate("neutralization_margin", neutral, "2 sum_{k<=11} contribution_k - 2 g_minus >= 0", neutral >= 0.0),
    ]
}

/// `I_* = ∫₀^{8/9} (1 - y)^{-1/2} φ_*(y) dy` from the integrated linear profile and the closed form.
pub fn push_up_integrals(tol: f64) -> Result<(f64, f64), VerifyError> {
    if !(tol > 0.0) {
        return Err(VerifyError::InvalidTolerance(tol));
    }
    let linear = LinearProfile::solve(&profile_options(tol))?;
    let quad = Quadrature::new(QUAD_TOL);
    let b = 8.0 / 9.0;
    let ode = quad.sqrt_singular(&|y: f64| linear.phi_at(y).unwrap_or(f64::NAN), 0.0, b)?;
    let closed = quad.sqrt_singular(&LinearProfile::closed_form, 0.0, b)?;
    Ok((ode, closed))
}

pub fn check_pushup(tol: f64) -> Result<Vec<CheckItem>, VerifyError> {
    let (i_star, closed) = push_up_integrals(tol)?;
    let factor = 99.0 / 50.0 * i_star;
    Ok(vec![
        CheckItem::near("I_star", i_star, REFERENCE_I_STAR, 1e-4),
        CheckItem::predicate("pushup_factor", factor, "(99/50) I_star > 1.1", factor > 1.1),
        CheckItem::near("I_star_closed_form", i_star - closed, 0.0, 1e-8),
    ])
}

fn table_items(table: &Table1) -> Vec<CheckItem> {
    let s = &table.summary;
    let mut items = vec![
        CheckItem::near("sup_phi", s.sup_phi, REFERENCE_SUP_PHI, TABLE_TOL),
        CheckItem::near("y0", s.y0, REFERENCE_Y0, TABLE_TOL),
        CheckItem::near("kappa0", s.kappa0, REFERENCE_KAPPA0, TABLE_TOL),
        CheckItem::near("g_minus", s.g_minus, REFERENCE_G_MINUS, TABLE_TOL),
        CheckItem::near("total", s.total, REFERENCE_TOTAL, TABLE_TOL),
    ];
    let worst = table
        .rows
        .iter()
        .zip(REFERENCE_ROWS.iter())
        .flat_map(|(row, reference)| row.cells().into_iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    items.push(CheckItem::near("table1_max_cell_deviation", worst, 0.0, TABLE_TOL));
    let increasing = table.rows.windows(2).all(|w| w[1].product > w[0].product) && table.rows[0].product > 1.0;
    let nonnegative = table.rows.iter().all(|r| r.contribution >= 0.0);
    let min_contribution = table.rows.iter().map(|r| r.contribution).fold(f64::INFINITY, f64::min);
    items.push(CheckItem::predicate(
        "table1_shape",
        min_contribution,
        "products strictly increasing, contributions >= 0",
        increasing && nonnegative,
    ));
    items.push(check_main_inequality(table));
    items.extend(check_c1(table));
    items
}

const TABLE_ITEM_NAMES: [&str; 11] = [
    "sup_phi",
    "y0",
    "kappa0",
    "g_minus",
    "total",
    "table1_max_cell_deviation",
    "table1_shape",
    "main_inequality_margin",
    "C1",
    "C1_over_3",
    "neutralization_margin",
];

fn g_constant_items() -> Vec<CheckItem> {
    let g = GConstants::new();
    vec![
        CheckItem::near("z0", g.z0, 1.681793, 1e-6),
        CheckItem::near("z_max", g.z_max, 0.890820, 1e-6),
        CheckItem::near("g_max", g.g_max, 1.018080, 1e-6),
        CheckItem::near("g_at_z_max", g_function(g.z_max), g.g_max, 1e-14),
    ]
}

/// Bisection width used for `ν₂` in the report.
pub const NU2_BISECTION: f64 = 1e-6;

pub fn check_nu2(tol: f64) -> Result<CheckItem, VerifyError> {
    if !(tol > 0.0) {
        return Err(VerifyError::InvalidTolerance(tol));
    }
    let nu2 = find_nu2_in(NU2_BISECTION, (1.0, 1.86), &profile_options(tol))?;
    Ok(CheckItem::near("nu2", nu2, REFERENCE_NU2, 5e-3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub nu0: f64,
    pub tol: f64,
    /// Worker threads; `0` lets the pool decide.
    pub jobs: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { nu0: NU0, tol: DEFAULT_TOL, jobs: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
enum Group {
    Table,
    Upper,
    PushUp,
    Nu2,
    GConstants,
}

fn run_group(group: Group, cfg: &VerifyConfig) -> Vec<CheckItem> {
    let fail_all = |names: &[&str], e: &VerifyError| -> Vec<CheckItem> {
        names.iter().map(|n| CheckItem::failed(n, Target::Predicate("computable".into()), 0.0, e)).collect()
    };
    match group {
        Group::Table => match build_table1_for(cfg.nu0, cfg.tol) {
            Ok(table) => table_items(&table),
            Err(e) => fail_all(&TABLE_ITEM_NAMES, &e),
        },
        Group::Upper => match check_upper_integral(cfg.nu0, cfg.tol) {
            Ok(item) => vec![item],
            Err(e) => fail_all(&["upper_integral"], &e),
        },
        Group::PushUp => match check_pushup(cfg.tol) {
            Ok(items) => items,
            Err(e) => fail_all(&["I_star", "pushup_factor", "I_star_closed_form"], &e),
        },
        Group::Nu2 => match check_nu2(cfg.tol) {
            Ok(item) => vec![item],
            Err(e) => fail_all(&["nu2"], &e),
        },
        Group::GConstants => g_constant_items(),
    }
}

/// Every check, in a fixed order; failures are recorded as failing items.
pub fn run_all(cfg: &VerifyConfig) -> VerificationReport {
    let groups = [Group::GConstants, Group::Table, Group::Upper, Group::PushUp, Group::Nu2];
    let run = || groups.par_iter().map(|g| run_group(*g, cfg)).collect::<Vec<_>>();
    let results = match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running checks on the global pool");
            run()
        }
    };
    VerificationReport::new(results.into_iter().flatten().collect())
}
