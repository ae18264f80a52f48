//! Self-similar profiles: odd solutions of
//!
//! ```text
//! (1 - y²) φ'' - y φ' + (9/4) φ - |φ|^{4/3} φ = 0,   φ(0) = 0,  φ'(0) = ν,
//! ```
//!
//! which generate exterior solutions `u(r, t) = r^{-3/2} φ(t / r)`, together
//! with the linear comparison profile (same equation without the power term).
//!
//! With `y = sin θ` the degenerate factor disappears and the equation becomes
//! the autonomous oscillator `φ_θθ + (9/4) φ - |φ|^{4/3} φ = 0` on `[0, π/2]`,
//! with `φ_θ = √(1 - y²) φ'`. All integration happens in `θ`; the endpoint
//! `y = 1` is the regular point `θ = π/2`.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::format::sig12;
use crate::nonlinearity::{critical_power, critical_power_derivative};
use crate::ode::{self, hermite5, Node, OdeError, OdeOptions, Outcome};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const BLOWUP_THRESHOLD: f64 = 1e6;
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;
/// Upper bound on the θ step; keeps the quintic interpolant accurate between nodes.
pub const MAX_THETA_STEP: f64 = 1.0 / 64.0;
/// Lower-bound slope constant below which the comparison argument applies.
pub const NU1: f64 = 0.05;

const RICHARDSON_LEVELS: std::ops::RangeInclusive<i32> = 6..=12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("initial slope must be non-negative and finite, got {0}")]
    InvalidSlope(f64),
    #[error("stop point y = {0} must lie in (0, 1]")]
    InvalidStop(f64),
    #[error("integration failed before y = {y_stop} without blow-up: {source}")]
    IntegrationFailure { y_stop: f64, source: OdeError },
    #[error("conserved quantity drifted by {drift:e} (allowed {tol:e})")]
    DriftExceeded { drift: f64, tol: f64 },
    #[error("y = {y} is outside the computed range [0, {y_max}]")]
    OutOfRange { y: f64, y_max: f64 },
    #[error("level {z} is not attained (sup φ = {sup_phi})")]
    NoSolution { z: f64, sup_phi: f64 },
    #[error("level {z} is reached after φ stops increasing; crossings at y = {crossings:?}")]
    Ambiguous { z: f64, crossings: Vec<f64> },
    #[error("no sign change of the limiting slope on the bracket; scan (ν, slope) = {scan:?}")]
    BracketFailure { scan: Vec<(f64, f64)> },
    #[error("comparison requires 0 < c ≤ {NU1} and 0 < y < 1, got c = {c}, y = {y}")]
    InvalidComparison { c: f64, y: f64 },
}

/// Fate of a profile on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Category {
    /// `|φ|` crossed the blow-up threshold at `y_plus`.
    BlowUp { y_plus: f64 },
    /// Defined on all of `[0, 1)`; limits of `φ` and `(1 - y²) φ'²` as `y → 1⁻`.
    /// `limit_slope` is the signed limit of `√(1 - y²) φ'`, whose square is `limit_flux`.
    Global { limit_phi: f64, limit_flux: f64, limit_slope: f64 },
    /// Integration was asked to stop at `y_end < 1` before any blow-up.
    Truncated { y_end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub tol: f64,
    pub y_stop: f64,
    pub blowup_threshold: f64,
    pub drift_tol: f64,
    pub max_step: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            tol: DEFAULT_TOL,
            y_stop: 1.0,
            blowup_threshold: BLOWUP_THRESHOLD,
            drift_tol: DEFAULT_DRIFT_TOL,
            max_step: MAX_THETA_STEP,
        }
    }
}

impl ProfileOptions {
    pub fn with_tol(tol: f64) -> Self {
        ProfileOptions { tol, ..Default::default() }
    }
}

/// Accepted integration nodes in `θ`, state `[φ, φ_θ]`.
#[derive(Debug, Clone)]
struct ThetaTrace {
    nodes: Vec<Node<2>>,
    nonlinear: bool,
}

impl ThetaTrace {
    fn third_derivative(&self, phi: f64, dphi: f64) -> f64 {
        let k = if self.nonlinear { critical_power_derivative(phi) } else { 0.0 };
        (-2.25 + k) * dphi
    }

    fn theta_end(&self) -> f64 {
        self.nodes.last().map(|n| n.t).unwrap_or(0.0)
    }

    /// `(φ, φ_θ)` at `theta` by quintic Hermite interpolation.
    fn eval(&self, theta: f64) -> (f64, f64) {
        let n = &self.nodes;
        let i = match n.binary_search_by(|node| node.t.total_cmp(&theta)) {
            Ok(i) => return (n[i].y[0], n[i].y[1]),
            Err(i) => i.clamp(1, n.len() - 1),
        };
        let (a, b) = (&n[i - 1], &n[i]);
        let (phi, _) = hermite5(a.t, [a.y[0], a.dy[0], a.dy[1]], b.t, [b.y[0], b.dy[0], b.dy[1]], theta);
        let pa = [a.y[1], a.dy[1], self.third_derivative(a.y[0], a.y[1])];
        let pb = [b.y[1], b.dy[1], self.third_derivative(b.y[0], b.y[1])];
        let (dphi, _) = hermite5(a.t, pa, b.t, pb, theta);
        (phi, dphi)
    }

    /// Bisection on the interpolant for `φ(θ) = z` inside node interval `i-1 .. i`.
    fn solve_level(&self, i: usize, z: f64) -> f64 {
        let (mut lo, mut hi) = (self.nodes[i - 1].t, self.nodes[i].t);
        let f_lo = self.nodes[i - 1].y[0] - z;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = self.eval(mid).0 - z;
            if f_mid == 0.0 {
                return mid;
            }
            if (f_mid > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn nonlinear_rhs(s: &[f64; 2]) -> [f64; 2] {
    [s[1], -2.25 * s[0] + critical_power(s[0])]
}

fn linear_rhs(s: &[f64; 2]) -> [f64; 2] {
    [s[1], -2.25 * s[0]]
}

/// `½ φ_θ² + (9/8) φ² - (3/10) |φ|^{10/3}`, i.e. `H(y)` with `φ_θ² = (1 - y²) φ'²`.
pub fn hamiltonian(phi: f64, dphi_theta: f64) -> f64 {
    0.5 * dphi_theta * dphi_theta + 1.125 * phi * phi - 0.3 * phi.abs().powf(10.0 / 3.0)
}

fn linear_hamiltonian(phi: f64, dphi_theta: f64) -> f64 {
    0.5 * dphi_theta * dphi_theta + 1.125 * phi * phi
}

/// Polynomial extrapolation to `h = 0` through `(h_k, v_k)` (Neville).
fn extrapolate_to_zero(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

fn richardson_marks() -> Vec<f64> {
    RICHARDSON_LEVELS.map(|k| FRAC_PI_2 - 2f64.powi(-k)).collect()
}

fn run_trace(nu: f64, nonlinear: bool, opts: &ProfileOptions) -> Result<(ThetaTrace, Outcome), ProfileError> {
    if !(opts.tol > 0.0) {
        return Err(ProfileError::InvalidTolerance(opts.tol));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(ProfileError::InvalidSlope(nu));
    }
    if !(opts.y_stop > 0.0 && opts.y_stop <= 1.0) {
        return Err(ProfileError::InvalidStop(opts.y_stop));
    }
    let theta_end = if opts.y_stop >= 1.0 { FRAC_PI_2 } else { opts.y_stop.asin() };
    let marks = if opts.y_stop >= 1.0 { richardson_marks() } else { Vec::new() };
    let ode_opts = OdeOptions { max_step: opts.max_step, ..OdeOptions::with_tol(opts.tol) };
    let threshold = opts.blowup_threshold;
    let result = if nonlinear {
        ode::integrate(nonlinear_rhs, 0.0, [0.0, nu], theta_end, &marks, &ode_opts, |n| n.y[0].abs() > threshold)
    } else {
        ode::integrate(linear_rhs, 0.0, [0.0, nu], theta_end, &marks, &ode_opts, |_| false)
    };
    let (nodes, outcome) =
        result.map_err(|source| ProfileError::IntegrationFailure { y_stop: opts.y_stop, source })?;
    Ok((ThetaTrace { nodes, nonlinear }, outcome))
}

/// Public arrays on `[0, 1)`: the terminal node at `θ = π/2` (y = 1) is kept internal.
fn public_arrays(trace: &ThetaTrace) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let visible = trace.nodes.iter().filter(|n| n.t < FRAC_PI_2);
    let mut grid = Vec::new();
    let mut phi = Vec::new();
    let mut dphi = Vec::new();
    for n in visible {
        grid.push(n.t.sin());
        phi.push(n.y[0]);
        dphi.push(n.y[1] / n.t.cos());
    }
    (grid, phi, dphi)
}

/// A solved self-similar profile `φ_ν` on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct SelfSimilarProfile {
    pub nu: f64,
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub category: Category,
    pub sup_phi: f64,
    pub energy_drift: f64,
    trace: ThetaTrace,
}

impl SelfSimilarProfile {
    pub fn solve(nu: f64, opts: &ProfileOptions) -> Result<Self, ProfileError> {
        let (trace, outcome) = run_trace(nu, true, opts)?;
        let nodes = &trace.nodes;
        let reference = 0.5 * nu * nu;

        let category = match outcome {
            Outcome::Stopped => {
                let i = nodes.len() - 1;
                let theta = trace.solve_level(i, opts.blowup_threshold.copysign(nodes[i].y[0]));
                Category::BlowUp { y_plus: theta.sin() }
            }
            Outcome::Reached if opts.y_stop >= 1.0 => {
                let marks = richardson_marks();
                let mut h = Vec::new();
                let mut phis = Vec::new();
                let mut slopes = Vec::new();
                for (k, m) in RICHARDSON_LEVELS.zip(marks.iter()) {
                    let node = nodes.iter().find(|n| n.t == *m).expect("checkpoint is a node");
                    h.push(2f64.powi(-k));
                    phis.push(node.y[0]);
                    slopes.push(node.y[1]);
                }
                let limit_phi = extrapolate_to_zero(&h, &phis);
                let limit_slope = extrapolate_to_zero(&h, &slopes);
                Category::Global { limit_phi, limit_flux: limit_slope * limit_slope, limit_slope }
            }
            Outcome::Reached => Category::Truncated { y_end: opts.y_stop },
        };

        let mut drift: f64 = 0.0;
        for n in nodes {
            let h = hamiltonian(n.y[0], n.y[1]);
            let d = (h - reference).abs();
            // Relative to the size of the individual terms once they exceed 1.
            let d = d / (0.5 * n.y[1] * n.y[1] + 0.3 * n.y[0].abs().powf(10.0 / 3.0)).max(1.0);
            drift = drift.max(d);
        }
        if drift >= opts.drift_tol {
            return Err(ProfileError::DriftExceeded { drift, tol: opts.drift_tol });
        }

        let (grid, phi, dphi) = public_arrays(&trace);
        let mut sup_phi = nodes.iter().map(|n| n.y[0]).fold(f64::NEG_INFINITY, f64::max);
        if let Category::Global { limit_phi, .. } = category {
            sup_phi = sup_phi.max(limit_phi);
        }
        Ok(SelfSimilarProfile { nu, grid, phi, dphi, category, sup_phi, energy_drift: drift, trace })
    }

    /// Largest `y` at which the profile can be evaluated.
    pub fn y_max(&self) -> f64 {
        self.trace.theta_end().sin()
    }

    fn check_y(&self, y: f64) -> Result<f64, ProfileError> {
        let y_max = self.y_max();
        if !(y >= 0.0 && y <= y_max) {
            return Err(ProfileError::OutOfRange { y, y_max });
        }
        Ok(y.asin().min(self.trace.theta_end()))
    }

    /// `φ(y)`.
    pub fn phi_at(&self, y: f64) -> Result<f64, ProfileError> {
        let theta = self.check_y(y)?;
        Ok(self.trace.eval(theta).0)
    }

    /// `(φ(y), √(1 - y²) φ'(y))`.
    pub fn state_at(&self, y: f64) -> Result<(f64, f64), ProfileError> {
        let theta = self.check_y(y)?;
        Ok(self.trace.eval(theta))
    }

    /// `φ'(y)`; undefined at `y = 1`.
    pub fn dphi_at(&self, y: f64) -> Result<f64, ProfileError> {
        let theta = self.check_y(y)?;
        Ok(self.trace.eval(theta).1 / theta.cos())
    }

    /// `H(y) = ½ (1 - y²) φ'² + (9/8) φ² - (3/10) |φ|^{10/3}`; equals `½ ν²` exactly.
    pub fn conserved_energy(&self, y: f64) -> Result<f64, ProfileError> {
        let (phi, dphi) = self.state_at(y)?;
        Ok(hamiltonian(phi, dphi))
    }

    /// Smallest `y` with `φ(y) = z` on the initial increasing segment.
    pub fn inverse_phi(&self, z: f64) -> Result<f64, ProfileError> {
        if z == 0.0 {
            return Ok(0.0);
        }
        let nodes = &self.trace.nodes;
        if !(z > 0.0) || z > self.sup_phi {
            return Err(ProfileError::NoSolution { z, sup_phi: self.sup_phi });
        }
        let mut brackets = Vec::new();
        for i in 1..nodes.len() {
            let (a, b) = (nodes[i - 1].y[0] - z, nodes[i].y[0] - z);
            if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
                brackets.push(i);
            }
        }
        let first = match brackets.first() {
            Some(&i) => i,
            None => return Err(ProfileError::NoSolution { z, sup_phi: self.sup_phi }),
        };
        let monotone = nodes[..=first].iter().all(|n| n.y[1] >= 0.0);
        if !monotone {
            let crossings = brackets.iter().map(|&i| self.trace.solve_level(i, z).sin()).collect();
            return Err(ProfileError::Ambiguous { z, crossings });
        }
        Ok(self.trace.solve_level(first, z).sin())
    }

    pub fn limit_flux(&self) -> Option<f64> {
        match self.category {
            Category::Global { limit_flux, .. } => Some(limit_flux),
            _ => None,
        }
    }

    /// Rows `y, phi, dphi, H` with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "y,phi,dphi,H")?;
        for n in self.trace.nodes.iter().filter(|n| n.t < FRAC_PI_2) {
            let (y, dphi) = (n.t.sin(), n.y[1] / n.t.cos());
            writeln!(
                out,
                "{},{},{},{}",
                sig12(y),
                sig12(n.y[0]),
                sig12(dphi),
                sig12(hamiltonian(n.y[0], n.y[1]))
            )?;
        }
        Ok(())
    }
}

pub fn integrate_profile(nu: f64, tol: f64, y_stop: f64) -> Result<SelfSimilarProfile, ProfileError> {
    SelfSimilarProfile::solve(nu, &ProfileOptions { tol, y_stop, ..Default::default() })
}

pub fn conserved_energy(p: &SelfSimilarProfile, y: f64) -> Result<f64, ProfileError> {
    p.conserved_energy(y)
}

pub fn inverse_phi(p: &SelfSimilarProfile, z: f64) -> Result<f64, ProfileError> {
    p.inverse_phi(z)
}

/// `φ_*`: the linear comparison profile, `φ(0) = 0`, `φ'(0) = 1`.
#[derive(Debug, Clone)]
pub struct LinearProfile {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub energy_drift: f64,
    trace: ThetaTrace,
}

impl LinearProfile {
    pub fn solve(opts: &ProfileOptions) -> Result<Self, ProfileError> {
        let (trace, _) = run_trace(1.0, false, opts)?;
        let drift = trace
            .nodes
            .iter()
            .map(|n| (linear_hamiltonian(n.y[0], n.y[1]) - 0.5).abs())
            .fold(0.0, f64::max);
        if drift >= opts.drift_tol {
            return Err(ProfileError::DriftExceeded { drift, tol: opts.drift_tol });
        }
        let (grid, phi, dphi) = public_arrays(&trace);
        Ok(LinearProfile { grid, phi, dphi, energy_drift: drift, trace })
    }

    /// `(2/3) sin((3/2) arcsin y)`.
    pub fn closed_form(y: f64) -> f64 {
        2.0 / 3.0 * (1.5 * y.asin()).sin()
    }

    pub fn phi_at(&self, y: f64) -> Result<f64, ProfileError> {
        let y_max = self.trace.theta_end().sin();
        if !(y >= 0.0 && y <= y_max) {
            return Err(ProfileError::OutOfRange { y, y_max });
        }
        Ok(self.trace.eval(y.asin().min(self.trace.theta_end())).0)
    }
}

pub fn integrate_linear_profile(tol: f64) -> Result<LinearProfile, ProfileError> {
    LinearProfile::solve(&ProfileOptions::with_tol(tol))
}

/// The slope `ν₂` at which the limiting flux `(1 - y²) φ'²` vanishes, by bisection
/// of the signed limit `√(1 - y²) φ'` over `[1.0, 1.86]`.
pub fn find_nu2(tol: f64) -> Result<f64, ProfileError> {
    find_nu2_in(tol, (1.0, 1.86), &ProfileOptions::default())
}

pub fn find_nu2_in(tol: f64, bracket: (f64, f64), opts: &ProfileOptions) -> Result<f64, ProfileError> {
    if !(tol > 0.0) {
        return Err(ProfileError::InvalidTolerance(tol));
    }
    let slope = |nu: f64| -> Result<Option<f64>, ProfileError> {
        let p = SelfSimilarProfile::solve(nu, opts)?;
        Ok(match p.category {
            Category::Global { limit_slope, .. } => Some(limit_slope),
            _ => None,
        })
    };
    let (mut lo, mut hi) = bracket;
    let s_lo = slope(lo)?;
    let s_hi = slope(hi)?;
    let (s_lo, _s_hi) = match (s_lo, s_hi) {
        (Some(a), Some(b)) if a * b < 0.0 => (a, b),
        _ => {
            let mut scan = Vec::new();
            for i in 0..=8 {
                let nu = lo + (hi - lo) * i as f64 / 8.0;
                scan.push((nu, slope(nu)?.unwrap_or(f64::NAN)));
            }
            return Err(ProfileError::BracketFailure { scan });
        }
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let s_mid = slope(mid)?.unwrap_or(f64::NAN);
        if s_mid == 0.0 {
            return Ok(mid);
        }
        if (s_mid > 0.0) == (s_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(φ_c(y), c φ_*(y))` for the comparison `φ_c > c φ_* > 0` on `(0, 1)`.
pub fn wronskian_compare(c: f64, y: f64) -> Result<(f64, f64), ProfileError> {
    if !(c > 0.0 && c <= NU1) || !(y > 0.0 && y < 1.0) {
        return Err(ProfileError::InvalidComparison { c, y });
    }
    let opts = ProfileOptions::default();
    let nonlinear = SelfSimilarProfile::solve(c, &opts)?;
    let linear = LinearProfile::solve(&opts)?;
    Ok((nonlinear.phi_at(y)?, c * linear.phi_at(y)?))
}
