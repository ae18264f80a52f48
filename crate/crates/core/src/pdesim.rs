//! Radial wave evolution on an exterior interval `[r_min, r_max]`.
//!
//! The field is advanced as `w = r² u`, which satisfies
//!
//! ```text
//! (∂_t² - ∂_r²) w = r² F(w / r²) - 2 w / r²
//! ```
//!
//! with `F(u) = |u|^{4/3} u` (focusing) or `F ≡ 0` (linear). The scheme is
//! the standard three-level leapfrog; the first step is a third-order Taylor
//! expansion built from the data and the equation.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::interp::CubicTable;
use crate::nonlinearity::{critical_power, critical_power_derivative, sigma4, GroundState};
use crate::profiles::{ProfileError, ProfileOptions, SelfSimilarProfile};
use crate::radiation::{data_from_profile, free_wave, RadialData, RadialFunction, RadiationProfile};

pub const BLOWUP_GUARD: f64 = 1e12;
const GRID_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    Focusing,
    Linear,
}

impl Nonlinearity {
    pub fn force(self, u: f64) -> f64 {
        match self {
            Nonlinearity::Focusing => critical_power(u),
            Nonlinearity::Linear => 0.0,
        }
    }

    fn force_derivative(self, u: f64) -> f64 {
        match self {
            Nonlinearity::Focusing => critical_power_derivative(u),
            Nonlinearity::Linear => 0.0,
        }
    }
}

/// Exact field `u(r, t)` used to pin boundary values.
pub type ExactField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Boundary {
    /// Upwind outflow at both ends; only `[r_min + t/cfl, r_max - t/cfl]` is trusted.
    DomainOfDependence,
    /// Boundary values taken from a closed form; the whole grid is trusted.
    DirichletExact(ExactField),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::DomainOfDependence => write!(f, "DomainOfDependence"),
            Boundary::DirichletExact(_) => write!(f, "DirichletExact(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub dr: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub nonlinearity: Nonlinearity,
    pub boundary: Boundary,
    /// Keep every `save_every`-th time level (the final level is always kept).
    pub save_every: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial data are not finite at r = {0}")]
    BadData(f64),
    #[error("|w| exceeded {BLOWUP_GUARD:e} at t = {t}, r = {r}")]
    BlowUp { t: f64, r: f64, last: Box<Trajectory> },
    #[error("time {0} is not a saved level")]
    NotSaved(f64),
    #[error("{what} needs r in [{lo}, {hi}], outside the trusted region [{trusted_lo}, {trusted_hi}] at t = {t}")]
    Untrusted { what: &'static str, lo: f64, hi: f64, trusted_lo: f64, trusted_hi: f64, t: f64 },
    #[error("cutoff support reaches r = {needed}, beyond r_max = {r_max}")]
    CutoffOutsideGrid { needed: f64, r_max: f64 },
    #[error("fewer than three saved times see r = t + {s}; need r_max >= {required_r_max}")]
    InsufficientCone { s: f64, required_r_max: f64 },
    #[error("characteristic bookkeeping needs {0}")]
    RayMisaligned(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

impl SimConfig {
    pub fn new(r_min: f64, r_max: f64, dr: f64, t_final: f64) -> Self {
        SimConfig {
            r_min,
            r_max,
            dr,
            cfl: 1.0,
            t_final,
            nonlinearity: Nonlinearity::Focusing,
            boundary: Boundary::DomainOfDependence,
            save_every: 1,
        }
    }

    pub fn linear(mut self) -> Self {
        self.nonlinearity = Nonlinearity::Linear;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_save_every(mut self, k: usize) -> Self {
        self.save_every = k;
        self
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.dr
    }

    /// Number of grid intervals.
    pub fn cells(&self) -> usize {
        ((self.r_max - self.r_min) / self.dr).round() as usize
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt() - GRID_SLACK).ceil().max(0.0) as usize
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.dr
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return bad(format!("r_min must be positive, got {}", self.r_min));
        }
        if !(self.r_max > self.r_min && self.r_max.is_finite()) {
            return bad(format!("need r_min < r_max, got [{}, {}]", self.r_min, self.r_max));
        }
        if !(self.dr > 0.0) {
            return bad(format!("dr must be positive, got {}", self.dr));
        }
        let span = self.r_max - self.r_min;
        let n = (span / self.dr).round();
        if n < 4.0 || (n * self.dr - span).abs() > GRID_SLACK * span.max(1.0) {
            return bad(format!("dr = {} must divide r_max - r_min = {} into at least 4 cells", self.dr, span));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("final time must be non-negative, got {}", self.t_final));
        }
        if self.save_every == 0 {
            return bad("save_every must be at least 1".into());
        }
        Ok(())
    }

    /// `[lo, hi]` unaffected by the artificial boundaries at time `t`.
    pub fn trusted(&self, t: f64) -> (f64, f64) {
        match self.boundary {
            Boundary::DirichletExact(_) => (self.r_min, self.r_max),
            Boundary::DomainOfDependence => {
                let reach = t.abs() / self.cfl;
                (self.r_min + reach, self.r_max - reach)
            }
        }
    }
}

/// Saved time levels of `w = r² u` and `∂_t w`.
#[derive(Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub r: Vec<f64>,
    pub times: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub wt: Vec<Vec<f64>>,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("config", &self.config)
            .field("points", &self.r.len())
            .field("levels", &self.times.len())
            .field("t_last", &self.times.last())
            .finish()
    }
}

impl PartialEq for Trajectory {
    fn eq(&self, other: &Self) -> bool {
        self.r == other.r && self.times == other.times && self.w == other.w && self.wt == other.wt
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the saved level at time `t` (within a quarter step).
    pub fn index_of(&self, t: f64) -> Result<usize, SimError> {
        let tol = 0.25 * self.config.dt();
        let i = self.times.partition_point(|&s| s < t - tol);
        if i < self.times.len() && (self.times[i] - t).abs() <= tol {
            Ok(i)
        } else {
            Err(SimError::NotSaved(t))
        }
    }

    pub fn u(&self, k: usize) -> Vec<f64> {
        self.w[k].iter().zip(&self.r).map(|(w, r)| w / (r * r)).collect()
    }

    pub fn u_t(&self, k: usize) -> Vec<f64> {
        self.wt[k].iter().zip(&self.r).map(|(w, r)| w / (r * r)).collect()
    }

    /// `∂_r w` by centered differences (second-order one-sided at the ends).
    pub fn w_r(&self, k: usize) -> Vec<f64> {
        let w = &self.w[k];
        let h = self.config.dr;
        let n = w.len();
        (0..n)
            .map(|i| {
                if i == 0 {
                    (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * h)
                } else {
                    (w[i + 1] - w[i - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// `∂_r u = w_r / r² - 2 w / r³`.
    pub fn u_r(&self, k: usize) -> Vec<f64> {
        let wr = self.w_r(k);
        (0..self.r.len())
            .map(|i| {
                let r = self.r[i];
                wr[i] / (r * r) - 2.0 * self.w[k][i] / (r * r * r)
            })
            .collect()
    }

    fn check_trusted(&self, what: &'static str, t: f64, lo: f64, hi: f64) -> Result<(), SimError> {
        let (tlo, thi) = self.config.trusted(t);
        let eps = GRID_SLACK * self.config.r_max;
        if lo < tlo - eps || hi > thi + eps {
            return Err(SimError::Untrusted { what, lo, hi, trusted_lo: tlo, trusted_hi: thi, t });
        }
        Ok(())
    }
}

fn source(nl: Nonlinearity, w: f64, r: f64) -> f64 {
    let r2 = r * r;
    r2 * nl.force(w / r2) - 2.0 * w / r2
}

fn source_derivative(nl: Nonlinearity, w: f64, r: f64) -> f64 {
    let r2 = r * r;
    nl.force_derivative(w / r2) - 2.0 / r2
}

fn laplacian(w: &[f64], i: usize, inv_dr2: f64) -> f64 {
    (w[i + 1] - 2.0 * w[i] + w[i - 1]) * inv_dr2
}

fn apply_boundary(cfg: &SimConfig, r: &[f64], prev: &[f64], next: &mut [f64], t_next: f64) {
    let n = next.len() - 1;
    match &cfg.boundary {
        Boundary::DirichletExact(exact) => {
            next[0] = r[0] * r[0] * exact(r[0], t_next);
            next[n] = r[n] * r[n] * exact(r[n], t_next);
        }
        Boundary::DomainOfDependence => {
            let c = cfg.cfl;
            next[0] = prev[0] + c * (prev[1] - prev[0]);
            next[n] = prev[n] - c * (prev[n] - prev[n - 1]);
        }
    }
}

fn first_guard_violation(w: &[f64]) -> Option<usize> {
    w.iter().position(|v| !v.is_finite() || v.abs() > BLOWUP_GUARD)
}

/// Evolve radial data forward to `cfg.t_final`.
pub fn simulate(d: &RadialData, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    evolve(d, cfg, 1.0)
}

/// Evolve `(u₀, u₁)` backward in time: runs `(u₀, -u₁)` forward and labels the
/// levels with negative times.
pub fn simulate_backward(d: &RadialData, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    evolve(d, cfg, -1.0)
}

fn evolve(d: &RadialData, cfg: &SimConfig, direction: f64) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let n = cfg.cells();
    let r: Vec<f64> = (0..=n).map(|i| cfg.radius(i)).collect();
    let dt = cfg.dt();
    let inv_dr2 = 1.0 / (cfg.dr * cfg.dr);
    let nl = cfg.nonlinearity;
    let steps = cfg.steps();

    // The backward run evolves (u0, -u1) forward; Dirichlet data see the reflected time.
    let run_cfg = match (&cfg.boundary, direction < 0.0) {
        (Boundary::DirichletExact(exact), true) => {
            let exact = exact.clone();
            let reflected: ExactField = Arc::new(move |r, t| exact(r, -t));
            SimConfig { boundary: Boundary::DirichletExact(reflected), ..cfg.clone() }
        }
        _ => cfg.clone(),
    };

    let mut w0 = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    for i in 0..=n {
        let r2 = r[i] * r[i];
        w0[i] = r2 * d.u0(r[i]);
        v[i] = direction * r2 * d.u1(r[i]);
        if !w0[i].is_finite() || !v[i].is_finite() {
            return Err(SimError::BadData(r[i]));
        }
    }

    let mut tr = Trajectory { config: cfg.clone(), r: r.clone(), times: Vec::new(), w: Vec::new(), wt: Vec::new() };
    let time = |k: usize| direction * k as f64 * dt;
    let saves = |k: usize| k % cfg.save_every == 0 || k == steps;

    // w¹ from the Taylor expansion w + dt w_t + dt²/2 w_tt + dt³/6 w_ttt.
    let mut w1 = vec![0.0; n + 1];
    for i in 1..n {
        let wtt = laplacian(&w0, i, inv_dr2) + source(nl, w0[i], r[i]);
        let wttt = laplacian(&v, i, inv_dr2) + source_derivative(nl, w0[i], r[i]) * v[i];
        w1[i] = w0[i] + dt * v[i] + 0.5 * dt * dt * wtt + dt * dt * dt / 6.0 * wttt;
    }
    apply_boundary(&run_cfg, &r, &w0, &mut w1, dt);
    if saves(0) {
        tr.times.push(time(0));
        tr.w.push(w0.clone());
        tr.wt.push(v.iter().map(|x| direction * x).collect());
    }
    if steps == 0 {
        return Ok(tr);
    }
    if let Some(i) = first_guard_violation(&w1) {
        return Err(SimError::BlowUp { t: time(1), r: r[i], last: Box::new(tr) });
    }

    let (mut prev, mut cur) = (w0, w1);
    let mut next = vec![0.0; n + 1];
    let dt2 = dt * dt;
    for k in 1..=steps {
        for i in 1..n {
            next[i] = 2.0 * cur[i] - prev[i] + dt2 * (laplacian(&cur, i, inv_dr2) + source(nl, cur[i], r[i]));
        }
        apply_boundary(&run_cfg, &r, &cur, &mut next, (k + 1) as f64 * dt);
        let guard = if k < steps { first_guard_violation(&next) } else { None };
        if saves(k) {
            let vel: Vec<f64> = if guard.is_some() || first_guard_violation(&next).is_some() {
                (0..=n).map(|i| direction * (cur[i] - prev[i]) / dt).collect()
            } else {
                (0..=n).map(|i| direction * (next[i] - prev[i]) / (2.0 * dt)).collect()
            };
            tr.times.push(time(k));
            tr.w.push(cur.clone());
            tr.wt.push(vel);
        }
        if let Some(i) = guard {
            return Err(SimError::BlowUp { t: time(k + 1), r: r[i], last: Box::new(tr) });
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(tr)
}

/// Trapezoid rule for `∫ f ρ⁴ dρ` over `[a, r_last]` with a linear partial first cell.
fn radial_trapezoid(r: &[f64], f: &[f64], a: f64) -> f64 {
    let dens: Vec<f64> = r.iter().zip(f).map(|(x, v)| v * x.powi(4)).collect();
    let j = r.partition_point(|&x| x < a);
    let mut total = 0.0;
    for i in j..r.len().saturating_sub(1) {
        total += 0.5 * (dens[i] + dens[i + 1]) * (r[i + 1] - r[i]);
    }
    if j > 0 && j < r.len() && a < r[j] {
        let s = (a - r[j - 1]) / (r[j] - r[j - 1]);
        let da = dens[j - 1] + s * (dens[j] - dens[j - 1]);
        total += 0.5 * (da + dens[j]) * (r[j] - a);
    }
    total
}

/// `σ₄ ∫_R^{hi} (½ u_r² + ½ u_t² - (3/10)|u|^{10/3}) ρ⁴ dρ`, where `hi` is the
/// right end of the trusted region; the potential term is present only for
/// focusing runs.
pub fn energy(tr: &Trajectory, t: f64, radius: f64) -> Result<f64, SimError> {
    let k = tr.index_of(t)?;
    let t = tr.times[k];
    let cfg = &tr.config;
    let mut radius = radius;
    if radius < cfg.r_min || radius > cfg.r_max {
        let clamped = radius.clamp(cfg.r_min, cfg.r_max);
        log::warn!("energy radius {radius} outside the grid; clamped to {clamped}");
        radius = clamped;
    }
    let (_, hi) = cfg.trusted(t);
    tr.check_trusted("energy", t, radius, hi)?;
    let (u, ut, ur) = (tr.u(k), tr.u_t(k), tr.u_r(k));
    let focusing = cfg.nonlinearity == Nonlinearity::Focusing;
    let m = tr.r.partition_point(|&x| x <= hi + GRID_SLACK * cfg.r_max);
    let dens: Vec<f64> = (0..m)
        .map(|i| {
            let pot = if focusing { 0.3 * u[i].abs().powf(10.0 / 3.0) } else { 0.0 };
            0.5 * ur[i] * ur[i] + 0.5 * ut[i] * ut[i] - pot
        })
        .collect();
    Ok(sigma4() * radial_trapezoid(&tr.r[..m], &dens, radius))
}

/// Approximation of the outgoing profile `G₊(s)` from `r² ∂_t u` along `r = t + s`,
/// extrapolated to `r = ∞` by a quadratic in `1/r` through three sampled times.
pub fn extract_outgoing(tr: &Trajectory, s: f64) -> Result<f64, SimError> {
    let cfg = &tr.config;
    let admissible: Vec<usize> = (0..tr.len())
        .filter(|&k| {
            let t = tr.times[k];
            let x = t + s;
            let (lo, hi) = cfg.trusted(t);
            t > 0.0 && x >= lo && x <= hi
        })
        .collect();
    if admissible.len() < 3 {
        let t3 = 3.0 * cfg.save_every as f64 * cfg.dt();
        let required_r_max = match cfg.boundary {
            Boundary::DirichletExact(_) => s + t3,
            Boundary::DomainOfDependence => s + t3 * (1.0 + 1.0 / cfg.cfl),
        };
        return Err(SimError::InsufficientCone { s, required_r_max });
    }
    let last = *admissible.last().unwrap();
    let t_last = tr.times[last];
    let pick = |target: f64| {
        *admissible
            .iter()
            .min_by(|&&a, &&b| (tr.times[a] - target).abs().total_cmp(&(tr.times[b] - target).abs()))
            .unwrap()
    };
    let mut ks = vec![pick(0.5 * t_last), pick(0.75 * t_last), last];
    ks.dedup();
    if ks.len() < 3 {
        let n = admissible.len();
        ks = vec![admissible[n - 3], admissible[n - 2], admissible[n - 1]];
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &k in &ks {
        let x = tr.times[k] + s;
        let table = CubicTable::new(tr.r.clone(), tr.wt[k].clone()).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        xs.push(1.0 / x);
        ys.push(table.eval(x).unwrap_or(0.0));
    }
    // Lagrange quadratic through (1/r, value), evaluated at 1/r = 0.
    let mut out = 0.0;
    for a in 0..3 {
        let mut l = 1.0;
        for b in 0..3 {
            if a != b {
                l *= (0.0 - xs[b]) / (xs[a] - xs[b]);
            }
        }
        out += ys[a] * l;
    }
    Ok(out)
}

/// Both sides of the finite identity along the ray `r = t + 1`:
/// `(w_t - w_r)(R', R'-1) - (w_t - w_r)(1, 0)` and `∫_1^{R'} (r² F(u) - 2u)(r, r-1) dr`.
pub fn characteristic_integral(tr: &Trajectory, r_prime: f64) -> Result<(f64, f64), SimError> {
    let cfg = &tr.config;
    if cfg.cfl != 1.0 {
        return Err(SimError::RayMisaligned(format!("cfl = 1, got {}", cfg.cfl)));
    }
    if cfg.save_every != 1 {
        return Err(SimError::RayMisaligned(format!("every level saved, got save_every = {}", cfg.save_every)));
    }
    let base = (1.0 - cfg.r_min) / cfg.dr;
    let i1 = base.round();
    if base < 0.0 || (base - i1).abs() > 1e-7 {
        return Err(SimError::RayMisaligned("r = 1 on the grid".into()));
    }
    let i1 = i1 as usize;
    let steps = (r_prime - 1.0) / cfg.dr;
    let m = steps.round();
    if steps < 0.0 || (steps - m).abs() > 1e-7 {
        return Err(SimError::RayMisaligned(format!("R' - 1 a multiple of dr, got R' = {r_prime}")));
    }
    let m = m as usize;
    if m >= tr.len() {
        return Err(SimError::RayMisaligned(format!("trajectory up to t = {}", r_prime - 1.0)));
    }
    if i1 + m + 1 >= tr.r.len() {
        return Err(SimError::RayMisaligned(format!("r_max > {r_prime}")));
    }
    let end_t = tr.times[m];
    tr.check_trusted("characteristic integral", end_t, r_prime, r_prime)?;
    tr.check_trusted("characteristic integral", 0.0, 1.0, 1.0)?;

    let char_value = |k: usize, i: usize| {
        let wr = (tr.w[k][i + 1] - tr.w[k][i - 1]) / (2.0 * cfg.dr);
        tr.wt[k][i] - wr
    };
    let lhs = char_value(m, i1 + m) - char_value(0, i1);
    let nl = cfg.nonlinearity;
    let h = |k: usize| {
        let i = i1 + k;
        let r = tr.r[i];
        let u = tr.w[k][i] / (r * r);
        r * r * nl.force(u) - 2.0 * u
    };
    let mut rhs = 0.0;
    for k in 0..m {
        rhs += 0.5 * (h(k) + h(k + 1)) * cfg.dr;
    }
    Ok((lhs, rhs))
}

/// Smooth ramp: 1 on `s <= 2`, 0 on `s >= 3`, quintic smoothstep in between.
pub fn ramp(s: f64) -> f64 {
    if s <= 2.0 {
        1.0
    } else if s >= 3.0 {
        0.0
    } else {
        let x = s - 2.0;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

fn ramp_derivative(s: f64) -> f64 {
    if s <= 2.0 || s >= 3.0 {
        0.0
    } else {
        let x = s - 2.0;
        -30.0 * x * x * (1.0 - x) * (1.0 - x)
    }
}

/// Cutoff `φ = ramp²` and its derivative.
pub fn cutoff(s: f64) -> (f64, f64) {
    let p = ramp(s);
    (p * p, 2.0 * p * ramp_derivative(s))
}

/// `(J, J', J'')` for `J(t) = ∫_{|x| > r_min} |u|² φ(|x|/scale) dx`:
///
/// ```text
/// J'  = 2σ₄ ∫ u u_t φ ρ⁴
/// J'' = 2σ₄ [∫ (u_t² - u_r² + u F(u)) φ ρ⁴ - (1/scale) ∫ φ'(ρ/scale) u u_r ρ⁴ - r_min⁴ (u u_r φ)(r_min)]
/// ```
pub fn virial(tr: &Trajectory, t: f64, scale: f64) -> Result<(f64, f64, f64), SimError> {
    let cfg = &tr.config;
    if !(scale > 0.0) {
        return Err(SimError::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    if 3.0 * scale > cfg.r_max {
        return Err(SimError::CutoffOutsideGrid { needed: 3.0 * scale, r_max: cfg.r_max });
    }
    let k = tr.index_of(t)?;
    let (u, ut, ur) = (tr.u(k), tr.u_t(k), tr.u_r(k));
    let nl = cfg.nonlinearity;
    let n = tr.r.len();
    let mut j = vec![0.0; n];
    let mut jp = vec![0.0; n];
    let mut jpp = vec![0.0; n];
    for i in 0..n {
        let (phi, dphi) = cutoff(tr.r[i] / scale);
        j[i] = u[i] * u[i] * phi;
        jp[i] = u[i] * ut[i] * phi;
        jpp[i] = (ut[i] * ut[i] - ur[i] * ur[i] + u[i] * nl.force(u[i])) * phi - dphi / scale * u[i] * ur[i];
    }
    let r0 = tr.r[0];
    let (phi0, _) = cutoff(r0 / scale);
    let flux = r0.powi(4) * u[0] * ur[0] * phi0;
    let s4 = sigma4();
    Ok((
        s4 * radial_trapezoid(&tr.r, &j, r0),
        2.0 * s4 * radial_trapezoid(&tr.r, &jp, r0),
        2.0 * s4 * (radial_trapezoid(&tr.r, &jpp, r0) - flux),
    ))
}

/// `(W_λ, 0)` with the exact stationary boundary values.
pub fn ground_state_setup(lambda: f64) -> (RadialData, Boundary) {
    let w = GroundState { lambda };
    (RadialData::ground_state(lambda), Boundary::DirichletExact(Arc::new(move |r, _| w.value(r))))
}

/// Data of the free wave with past profile `g`, with exact boundary values.
pub fn free_wave_setup(g: &RadiationProfile) -> (RadialData, Boundary) {
    let data = data_from_profile(g);
    let profile = g.clone();
    let exact: ExactField = Arc::new(move |r, t| free_wave(&profile, r, t).unwrap_or(f64::NAN));
    (data, Boundary::DirichletExact(exact))
}

/// `u = r^{-3/2} φ_ν(t/r)` on `r > |t|`: data `(0, ν r^{-5/2})` and exact boundary values.
pub fn self_similar_setup(nu: f64) -> Result<(RadialData, Boundary, Arc<SelfSimilarProfile>), SimError> {
    let profile = Arc::new(SelfSimilarProfile::solve(nu, &ProfileOptions::default())?);
    let p = profile.clone();
    let exact: ExactField = Arc::new(move |r, t| {
        let y = t / r;
        let phi = if y >= 0.0 { p.phi_at(y) } else { p.phi_at(-y).map(|v| -v) };
        phi.map(|v| v * r.powf(-1.5)).unwrap_or(f64::NAN)
    });
    let u1 = RadialFunction::closed(move |r| nu * r.powf(-2.5), &[]);
    let data = RadialData::new(RadialFunction::zero(), u1, 0.0, None);
    Ok((data, Boundary::DirichletExact(exact), profile))
}
