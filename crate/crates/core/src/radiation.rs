//! Radiation fields of radial free waves in R^5.
//!
//! A past radiation profile `G` determines the free wave
//!
//! ```text
//! u(r, t) = r^{-3} ∫_{t-r}^{t+r} (s - t) G(s) ds,
//! ```
//!
//! whose data at `t = 0` are `u₀(r) = r^{-3} M₁(r)` and
//! `u₁(r) = r^{-2} [G(r) + G(-r)] - r^{-3} M₀(r)` with the symmetric moments
//! `M₀(R) = ∫_{-R}^{R} G`, `M₁(R) = ∫_{-R}^{R} s G`.

use std::fmt;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::format::sig12;
use crate::interp::{CubicTable, TableError};
use crate::nonlinearity::{sigma4, GroundState};
use crate::quadrature::{QuadError, Quadrature, Tail};

pub type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const QUAD_TOL: f64 = 1e-12;
/// Tolerance for profiles rebuilt from finite-differenced samples.
const REDUCED_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadiationError {
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("free evolution formula needs r > t >= 0, got r = {r}, t = {t}")]
    OutsideCone { r: f64, t: f64 },
    #[error("support [{lo}, {hi}] is empty or not finite")]
    InvalidSupport { lo: f64, hi: f64 },
    #[error("decay exponent {p} is too slow for {what}")]
    SlowDecay { p: f64, what: &'static str },
    #[error("data carry no decay declaration; give a compact support bound or a decay law")]
    MissingDecay,
    #[error("profile is only known for |s| >= {radius}; window [{a}, {b}] cuts into the unknown part")]
    InteriorWindow { radius: f64, a: f64, b: f64 },
    #[error("profile is only known for |s| >= {0}; translation is undefined")]
    ExteriorShift(f64),
    #[error("profile jumps by {jump:e} at r = {r}")]
    Discontinuity { r: f64, jump: f64 },
    #[error("level {rho} is not below the maximum {max} of the residue curve")]
    NoSolution { rho: f64, max: f64 },
    #[error("cannot parse profile spec '{0}'")]
    BadSpec(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

impl From<csv::Error> for RadiationError {
    fn from(e: csv::Error) -> Self {
        RadiationError::Csv(e.to_string())
    }
}

/// Behaviour of a profile away from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileDecay {
    /// `G = 0` outside `[lo, hi]`.
    Compact { lo: f64, hi: f64 },
    /// `|G(s)| = O(|s|^{-p})`.
    Power(f64),
}

/// Moments of a profile over `[-radius, radius]`, for profiles that are only
/// known on `|s| >= radius` (reconstructed from exterior data).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerMoments {
    pub radius: f64,
    pub m0: f64,
    pub m1: f64,
}

#[derive(Clone)]
enum Repr {
    Closed(Func),
    Sampled(Arc<CubicTable>),
}

/// A radial radiation profile `G(s)`.
#[derive(Clone)]
pub struct RadiationProfile {
    repr: Repr,
    offset: f64,
    decay: ProfileDecay,
    breaks: Vec<f64>,
    inner: Option<InnerMoments>,
    quad: Quadrature,
    norm: OnceLock<f64>,
    /// Set when the profile was reconstructed from sampled data whose
    /// derivative had to be estimated by finite differences.
    pub reduced_accuracy: bool,
}

impl fmt::Debug for RadiationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr::Closed(_) => "closed",
            Repr::Sampled(_) => "sampled",
        };
        f.debug_struct("RadiationProfile")
            .field("repr", &kind)
            .field("offset", &self.offset)
            .field("decay", &self.decay)
            .field("inner", &self.inner)
            .finish()
    }
}

fn check_support(lo: f64, hi: f64) -> Result<(), RadiationError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(RadiationError::InvalidSupport { lo, hi })
    }
}

fn tail_law(p: f64, degree: f64, what: &'static str) -> Result<Tail, RadiationError> {
    if p - degree > 1.0 {
        Ok(Tail::PowerDecay(p - degree))
    } else {
        Err(RadiationError::SlowDecay { p, what })
    }
}

impl RadiationProfile {
    fn build(repr: Repr, decay: ProfileDecay, mut breaks: Vec<f64>) -> Self {
        if let ProfileDecay::Compact { lo, hi } = decay {
            breaks.push(lo);
            breaks.push(hi);
        }
        breaks.retain(|b| b.is_finite());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        RadiationProfile {
            repr,
            offset: 0.0,
            decay,
            breaks,
            inner: None,
            quad: Quadrature::new(QUAD_TOL),
            norm: OnceLock::new(),
            reduced_accuracy: false,
        }
    }

    /// `G ≡ 0`.
    pub fn zero() -> Self {
        Self::build(Repr::Closed(Arc::new(|_| 0.0)), ProfileDecay::Compact { lo: 0.0, hi: 0.0 }, Vec::new())
    }

    /// Closed form supported in `[lo, hi]`; `breaks` lists interior kinks or jumps.
    pub fn closed<F>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> Result<Self, RadiationError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_support(lo, hi)?;
        Ok(Self::build(Repr::Closed(Arc::new(f)), ProfileDecay::Compact { lo, hi }, breaks.to_vec()))
    }

    /// Closed form on the whole line with `|G(s)| = O(|s|^{-p})`.
    pub fn closed_decaying<F>(f: F, p: f64, breaks: &[f64]) -> Result<Self, RadiationError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(p > 1.0) {
            return Err(RadiationError::SlowDecay { p, what: "a radiation profile" });
        }
        Ok(Self::build(Repr::Closed(Arc::new(f)), ProfileDecay::Power(p), breaks.to_vec()))
    }

    /// Cubic interpolant of samples, zero outside the sampled range.
    pub fn sampled(s: Vec<f64>, g: Vec<f64>) -> Result<Self, RadiationError> {
        let table = CubicTable::new(s, g)?;
        let (lo, hi) = (table.lo(), table.hi());
        let breaks = table.x().to_vec();
        Ok(Self::build(Repr::Sampled(Arc::new(table)), ProfileDecay::Compact { lo, hi }, breaks))
    }

    /// `1_{[a, b]}`.
    pub fn indicator(a: f64, b: f64) -> Result<Self, RadiationError> {
        Self::closed(|_| 1.0, a, b, &[])
    }

    /// Parse `kind:args` terms joined by `+`:
    /// `box:a:b`, `ramp:a:b` (s on [a, b]), `bump:c:w[:amp]` (`amp (1 - x²)⁴`),
    /// `wavelet:c:w[:amp]` (`amp (1 - x²)² (7x² - 1)`, zero mean and first moment),
    /// with `x = (s - c)/w`; or `zero`.
    pub fn from_spec(spec: &str) -> Result<Self, RadiationError> {
        let bad = || RadiationError::BadSpec(spec.to_string());
        let spec_trim = spec.trim();
        if spec_trim == "zero" {
            return Ok(Self::zero());
        }
        type Term = (f64, f64, Box<dyn Fn(f64) -> f64 + Send + Sync>);
        let mut terms: Vec<Term> = Vec::new();
        for term in spec_trim.split('+') {
            let mut parts = term.trim().split(':');
            let kind = parts.next().ok_or_else(bad)?;
            let nums: Vec<f64> = parts.map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
            let t: Term = match (kind, nums.as_slice()) {
                ("box", [a, b]) if a < b => (*a, *b, Box::new(|_| 1.0)),
                ("ramp", [a, b]) if a < b => (*a, *b, Box::new(|s| s)),
                ("bump", [c, w]) | ("bump", [c, w, _]) if *w > 0.0 => {
                    let (c, w, amp) = (*c, *w, nums.get(2).copied().unwrap_or(1.0));
                    (c - w, c + w, Box::new(move |s| {
                        let x = (s - c) / w;
                        amp * (1.0 - x * x).powi(4)
                    }))
                }
                ("wavelet", [c, w]) | ("wavelet", [c, w, _]) if *w > 0.0 => {
                    let (c, w, amp) = (*c, *w, nums.get(2).copied().unwrap_or(1.0));
                    (c - w, c + w, Box::new(move |s| {
                        let x = (s - c) / w;
                        amp * (1.0 - x * x).powi(2) * (7.0 * x * x - 1.0)
                    }))
                }
                _ => return Err(bad()),
            };
            terms.push(t);
        }
        let lo = terms.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
        let hi = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        let breaks: Vec<f64> = terms.iter().flat_map(|t| [t.0, t.1]).collect();
        let f = move |s: f64| {
            terms.iter().filter(|t| s >= t.0 && s <= t.1).map(|t| (t.2)(s)).sum()
        };
        Self::closed(f, lo, hi, &breaks)
    }

    /// The radiation profile of `(W_λ, 0)`: `G(s) = (3/2) s λ^{-5/2} (1 + s²/(15λ²))^{-5/2}`.
    pub fn ground_state(lambda: f64) -> Result<Self, RadiationError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(RadiationError::InvalidRadius(lambda));
        }
        let f = move |s: f64| {
            let x = s / lambda;
            1.5 * x * lambda.powf(-1.5) * (1.0 + x * x / 15.0).powf(-2.5)
        };
        Self::closed_decaying(f, 4.0, &[])
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.quad = Quadrature::new(tol);
        self.norm = OnceLock::new();
        self
    }

    pub fn decay(&self) -> ProfileDecay {
        self.decay
    }

    /// `(lo, hi)` for compactly supported profiles.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.decay {
            ProfileDecay::Compact { lo, hi } => Some((lo, hi)),
            ProfileDecay::Power(_) => None,
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn inner_moments(&self) -> Option<InnerMoments> {
        self.inner
    }

    fn raw(&self, s: f64) -> f64 {
        let x = s + self.offset;
        match &self.repr {
            Repr::Closed(f) => f(x),
            Repr::Sampled(t) => t.eval(x).unwrap_or(0.0),
        }
    }

    /// `G(s)`; zero outside the declared support and inside the unknown
    /// interior of exterior profiles.
    pub fn value(&self, s: f64) -> f64 {
        if let ProfileDecay::Compact { lo, hi } = self.decay {
            if s < lo || s > hi {
                return 0.0;
            }
        }
        if let Some(inner) = self.inner {
            if s.abs() < inner.radius {
                return 0.0;
            }
        }
        self.raw(s)
    }

    fn extent(&self) -> f64 {
        self.breaks.iter().fold(0.0, |m: f64, b| m.max(b.abs()))
    }

    /// `∫_a^b w(s) G(s) ds` over a window avoiding the unknown interior;
    /// `degree` is the growth exponent of `w`, used for infinite ends.
    fn window(&self, w: &dyn Fn(f64) -> f64, degree: f64, a: f64, b: f64) -> Result<f64, RadiationError> {
        let (mut lo, mut hi) = (a, b);
        if let ProfileDecay::Compact { lo: sl, hi: sh } = self.decay {
            lo = lo.max(sl);
            hi = hi.min(sh);
        }
        if !(lo < hi) {
            return Ok(0.0);
        }
        let f = |s: f64| w(s) * self.value(s);
        let reach = self.extent() + 1.0;
        let core_lo = if lo.is_finite() { lo } else { (-reach).min(hi - 1.0) };
        let core_hi = if hi.is_finite() { hi } else { reach.max(core_lo + 1.0) };
        let mut total = self.quad.adaptive_with_breaks(&f, core_lo, core_hi, &self.breaks)?;
        if let ProfileDecay::Power(p) = self.decay {
            if hi.is_infinite() {
                total += self.quad.tail(&f, core_hi, tail_law(p, degree, "this moment")?)?;
            }
            if lo.is_infinite() {
                let g = |u: f64| f(-u);
                total += self.quad.tail(&g, -core_lo, tail_law(p, degree, "this moment")?)?;
            }
        }
        Ok(total)
    }

    /// `∫_a^b (c0 + c1 s) G(s) ds`.
    pub fn linear_moment(&self, a: f64, b: f64, c0: f64, c1: f64) -> Result<f64, RadiationError> {
        let degree = if c1 != 0.0 { 1.0 } else { 0.0 };
        let w = |s: f64| c0 + c1 * s;
        match self.inner {
            None => self.window(&w, degree, a, b),
            Some(inner) => {
                let rad = inner.radius;
                if a <= -rad && b >= rad {
                    Ok(c0 * inner.m0
                        + c1 * inner.m1
                        + self.window(&w, degree, a, -rad)?
                        + self.window(&w, degree, rad, b)?)
                } else if b <= -rad || a >= rad {
                    self.window(&w, degree, a, b)
                } else {
                    Err(RadiationError::InteriorWindow { radius: rad, a, b })
                }
            }
        }
    }

    /// Folded integral `∫_lo^hi h(s, G(s), G(-s)) ds` over `0 <= lo < hi <= ∞`.
    fn folded(
        &self,
        h: &dyn Fn(f64, f64, f64) -> f64,
        decay_exponent: f64,
        lo: f64,
        hi: f64,
    ) -> Result<f64, RadiationError> {
        let mut top = hi;
        if let ProfileDecay::Compact { lo: sl, hi: sh } = self.decay {
            top = top.min(sl.abs().max(sh.abs()));
        }
        if !(lo < top) {
            return Ok(0.0);
        }
        let f = |s: f64| h(s, self.value(s), self.value(-s));
        let folded_breaks: Vec<f64> = self.breaks.iter().map(|b| b.abs()).collect();
        if top.is_finite() {
            return Ok(self.quad.adaptive_with_breaks(&f, lo, top, &folded_breaks)?);
        }
        let cut = (self.extent() + 1.0).max(lo + 1.0);
        let head = self.quad.adaptive_with_breaks(&f, lo, cut, &folded_breaks)?;
        let tail = tail_law(decay_exponent, 0.0, "this moment")?;
        Ok(head + self.quad.tail(&f, cut, tail)?)
    }

    fn power(&self) -> f64 {
        match self.decay {
            ProfileDecay::Power(p) => p,
            ProfileDecay::Compact { .. } => f64::INFINITY,
        }
    }

    /// Symmetric moments `(M₀(R), M₁(R))`; `R = ∞` gives the full-line moments.
    pub fn moments(&self, radius: f64) -> Result<(f64, f64), RadiationError> {
        if !(radius > 0.0) {
            return Err(RadiationError::InvalidRadius(radius));
        }
        let p = self.power();
        let (start, mut m0, mut m1) = match self.inner {
            Some(inner) if radius < inner.radius => {
                return Err(RadiationError::InteriorWindow { radius: inner.radius, a: -radius, b: radius })
            }
            Some(inner) => (inner.radius, inner.m0, inner.m1),
            None => (0.0, 0.0, 0.0),
        };
        m0 += self.folded(&|_, gp, gm| gp + gm, p, start, radius)?;
        m1 += self.folded(&|s, gp, gm| s * (gp - gm), p - 1.0, start, radius)?;
        Ok((m0, m1))
    }

    /// `∫_{|s| > R} G²`.
    pub fn norm_sq_outside(&self, radius: f64) -> Result<f64, RadiationError> {
        if let Some(inner) = self.inner {
            if radius < inner.radius {
                return Err(RadiationError::InteriorWindow { radius: inner.radius, a: -radius, b: radius });
            }
        }
        self.folded(&|_, gp, gm| gp * gp + gm * gm, 2.0 * self.power(), radius.max(0.0), f64::INFINITY)
    }

    /// `‖G‖_{L²}` over the known part of the line (cached).
    pub fn norm_l2(&self) -> Result<f64, RadiationError> {
        if let Some(&v) = self.norm.get() {
            return Ok(v);
        }
        let start = self.inner.map(|i| i.radius).unwrap_or(0.0);
        let v = self.norm_sq_outside(start)?.max(0.0).sqrt();
        let _ = self.norm.set(v);
        Ok(v)
    }

    /// `s ↦ G(s + t0)`.
    pub fn shifted(&self, t0: f64) -> Result<Self, RadiationError> {
        if let Some(inner) = self.inner {
            return Err(RadiationError::ExteriorShift(inner.radius));
        }
        let mut out = self.clone();
        out.offset += t0;
        out.decay = match self.decay {
            ProfileDecay::Compact { lo, hi } => ProfileDecay::Compact { lo: lo - t0, hi: hi - t0 },
            d => d,
        };
        out.breaks = self.breaks.iter().map(|b| b - t0).collect();
        out.norm = OnceLock::new();
        Ok(out)
    }

    /// `s ↦ G(-s)`, the outgoing profile of the same free wave.
    pub fn reflected(&self) -> Self {
        let inner = self.clone();
        let f = move |s: f64| inner.value(-s);
        let decay = match self.decay {
            ProfileDecay::Compact { lo, hi } => ProfileDecay::Compact { lo: -hi, hi: -lo },
            d => d,
        };
        let mut out = Self::build(Repr::Closed(Arc::new(f)), decay, self.breaks.iter().map(|b| -b).collect());
        out.inner = self.inner.map(|i| InnerMoments { m1: -i.m1, ..i });
        out.quad = self.quad;
        out.reduced_accuracy = self.reduced_accuracy;
        out
    }

    /// `(s, G(s))` on a grid of spacing close to `ds`, skipping the unknown interior.
    pub fn samples(&self, ds: f64, reach: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = self.support().unwrap_or((-reach, reach));
        if !(hi > lo) || !(ds > 0.0) {
            return Vec::new();
        }
        let n = ((hi - lo) / ds).ceil().max(1.0) as usize;
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .filter(|s| self.inner.map_or(true, |inner| s.abs() >= inner.radius))
            .map(|s| (s, self.value(s)))
            .collect()
    }
}

/// A radial function `r ↦ f(r)` with optional exact derivative and known break points.
#[derive(Clone)]
pub struct RadialFunction {
    value: Func,
    derivative: Option<Func>,
    pub breaks: Vec<f64>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("derivative", &self.derivative.is_some())
            .field("breaks", &self.breaks)
            .finish()
    }
}

impl RadialFunction {
    pub fn closed<F>(f: F, breaks: &[f64]) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RadialFunction { value: Arc::new(f), derivative: None, breaks: breaks.to_vec() }
    }

    pub fn with_derivative<F, D>(f: F, df: D, breaks: &[f64]) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RadialFunction { value: Arc::new(f), derivative: Some(Arc::new(df)), breaks: breaks.to_vec() }
    }

    pub fn zero() -> Self {
        Self::with_derivative(|_| 0.0, |_| 0.0, &[])
    }

    /// Cubic interpolant; zero outside the sampled range. No derivative access.
    pub fn sampled(r: Vec<f64>, v: Vec<f64>) -> Result<Self, RadiationError> {
        let table = Arc::new(CubicTable::new(r, v)?);
        let breaks = table.x().to_vec();
        Ok(RadialFunction { value: Arc::new(move |x| table.eval(x).unwrap_or(0.0)), derivative: None, breaks })
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn derivative(&self, r: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(r))
    }
}

/// How radial data behave for large `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataDecay {
    /// Both components vanish for `r > bound`.
    Compact(f64),
    /// `u₀ = u0_coeff / r³` and `u₁ = u1_coeff / r³` exactly for `r >= from`
    /// (data of a compactly supported profile).
    InverseCube { from: f64, u0_coeff: f64, u1_coeff: f64 },
    /// `|u₀| ≲ r^{-data}`, `|u₀'|, |u₁| ≲ r^{-data-1}`; the reconstructed
    /// profile is declared to decay like `|s|^{-profile}`.
    Power { data: f64, profile: f64 },
}

/// Radial initial data `(u₀, u₁)` on `r > exterior_radius`.
#[derive(Debug, Clone)]
pub struct RadialData {
    u0: RadialFunction,
    u1: RadialFunction,
    pub exterior_radius: f64,
    pub decay: Option<DataDecay>,
}

const FD_STEP: f64 = 1e-6;

impl RadialData {
    pub fn new(u0: RadialFunction, u1: RadialFunction, exterior_radius: f64, decay: Option<DataDecay>) -> Self {
        RadialData { u0, u1, exterior_radius, decay }
    }

    /// Samples on a common strictly increasing grid; the first node is the exterior radius.
    pub fn sampled(r: Vec<f64>, u0: Vec<f64>, u1: Vec<f64>, decay: Option<DataDecay>) -> Result<Self, RadiationError> {
        let exterior_radius = r.first().copied().unwrap_or(0.0);
        let u0 = RadialFunction::sampled(r.clone(), u0)?;
        let u1 = RadialFunction::sampled(r, u1)?;
        Ok(RadialData { u0, u1, exterior_radius, decay })
    }

    /// `(W_λ, 0)`.
    pub fn ground_state(lambda: f64) -> Self {
        let w = GroundState { lambda };
        RadialData {
            u0: RadialFunction::with_derivative(move |r| w.value(r), move |r| w.derivative(r), &[]),
            u1: RadialFunction::zero(),
            exterior_radius: 0.0,
            decay: Some(DataDecay::Power { data: 3.0, profile: 4.0 }),
        }
    }

    pub fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.u0.breaks.iter().chain(&self.u1.breaks).copied().collect();
        if let Some(DataDecay::Compact(x)) | Some(DataDecay::InverseCube { from: x, .. }) = self.decay {
            b.push(x);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn compact_support_bound(&self) -> Option<f64> {
        match self.decay {
            Some(DataDecay::Compact(b)) => Some(b),
            _ => None,
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.u0.has_derivative()
    }

    pub fn u0(&self, r: f64) -> f64 {
        match self.decay {
            Some(DataDecay::Compact(b)) if r > b => 0.0,
            Some(DataDecay::InverseCube { from, u0_coeff, .. }) if r >= from => u0_coeff / (r * r * r),
            _ => self.u0.eval(r),
        }
    }

    pub fn u1(&self, r: f64) -> f64 {
        match self.decay {
            Some(DataDecay::Compact(b)) if r > b => 0.0,
            Some(DataDecay::InverseCube { from, u1_coeff, .. }) if r >= from => u1_coeff / (r * r * r),
            _ => self.u1.eval(r),
        }
    }

    /// `u₀'(r)`, exact when available, otherwise a second-order difference
    /// (one-sided at the exterior radius).
    pub fn du0(&self, r: f64) -> f64 {
        match self.decay {
            Some(DataDecay::Compact(b)) if r > b => return 0.0,
            Some(DataDecay::InverseCube { from, u0_coeff, .. }) if r >= from => return -3.0 * u0_coeff / r.powi(4),
            _ => {}
        }
        if let Some(d) = self.u0.derivative(r) {
            return d;
        }
        let h = FD_STEP * r.abs().max(1.0);
        let inside = match self.decay {
            Some(DataDecay::Compact(b)) | Some(DataDecay::InverseCube { from: b, .. }) => r + h > b,
            _ => false,
        };
        if inside {
            (3.0 * self.u0(r) - 4.0 * self.u0(r - h) + self.u0(r - 2.0 * h)) / (2.0 * h)
        } else if r - h < self.exterior_radius {
            (-3.0 * self.u0(r) + 4.0 * self.u0(r + h) - self.u0(r + 2.0 * h)) / (2.0 * h)
        } else {
            (self.u0(r + h) - self.u0(r - h)) / (2.0 * h)
        }
    }

    /// `[r, u₀(r), u₁(r)]` rows.
    pub fn sample(&self, grid: &[f64]) -> Vec<[f64; 3]> {
        grid.iter().map(|&r| [r, self.u0(r), self.u1(r)]).collect()
    }

    /// `∫_R^∞ (|u₀'|² + |u₁|²) ρ⁴ dρ` (without the sphere area).
    fn energy_density_integral(&self, radius: f64, quad: &Quadrature) -> Result<f64, RadiationError> {
        let f = |rho: f64| {
            let (a, b) = (self.du0(rho), self.u1(rho));
            (a * a + b * b) * rho.powi(4)
        };
        let breaks = self.breaks();
        match self.decay {
            None => Err(RadiationError::MissingDecay),
            Some(DataDecay::Compact(b)) => {
                if radius >= b {
                    Ok(0.0)
                } else {
                    Ok(quad.adaptive_with_breaks(&f, radius, b, &breaks)?)
                }
            }
            Some(DataDecay::InverseCube { from, u0_coeff, u1_coeff }) => {
                let x = radius.max(from);
                let exact = 3.0 * u0_coeff * u0_coeff / x.powi(3) + u1_coeff * u1_coeff / x;
                let head = if radius < from { quad.adaptive_with_breaks(&f, radius, from, &breaks)? } else { 0.0 };
                Ok(head + exact)
            }
            Some(DataDecay::Power { data, .. }) => {
                let law = tail_law(2.0 * data - 2.0, 0.0, "the exterior energy")?;
                let cut = breaks.iter().fold(radius, |m, &b| m.max(b)) + 1.0;
                let head = quad.adaptive_with_breaks(&f, radius, cut, &breaks)?;
                Ok(head + quad.tail(&f, cut, law)?)
            }
        }
    }
}

/// `τ⃗(R) = (τ₁, τ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResiduePair {
    pub tau1: f64,
    pub tau2: f64,
    pub radius: f64,
}

fn check_radius(r: f64) -> Result<(), RadiationError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(RadiationError::InvalidRadius(r))
    }
}

/// `u(r, t) = r^{-3} ∫_{t-r}^{t+r} (s - t) G(s) ds`.
pub fn free_wave(g: &RadiationProfile, r: f64, t: f64) -> Result<f64, RadiationError> {
    check_radius(r)?;
    Ok(g.linear_moment(t - r, t + r, -t, 1.0)? / (r * r * r))
}

/// `∂_t u = r^{-2} [G(t+r) + G(t-r)] - r^{-3} ∫_{t-r}^{t+r} G`.
pub fn free_wave_velocity(g: &RadiationProfile, r: f64, t: f64) -> Result<f64, RadiationError> {
    check_radius(r)?;
    let m = g.linear_moment(t - r, t + r, 1.0, 0.0)?;
    Ok((g.value(t + r) + g.value(t - r)) / (r * r) - m / (r * r * r))
}

/// `∂_r u = r^{-2} [G(t+r) - G(t-r)] - 3 r^{-4} ∫_{t-r}^{t+r} (s - t) G`.
pub fn free_wave_gradient(g: &RadiationProfile, r: f64, t: f64) -> Result<f64, RadiationError> {
    check_radius(r)?;
    let m = g.linear_moment(t - r, t + r, -t, 1.0)?;
    Ok((g.value(t + r) - g.value(t - r)) / (r * r) - 3.0 * m / r.powi(4))
}

/// Free evolution of `(0, u₁)` at `r > t >= 0`:
/// `(1/(4r³)) ∫_{r-t}^{r+t} ρ (r² + ρ² - t²) u₁(ρ) dρ`.
pub fn positive_propagator(u1: &RadialFunction, r: f64, t: f64) -> Result<f64, RadiationError> {
    if !(t >= 0.0 && r > t && r.is_finite()) {
        return Err(RadiationError::OutsideCone { r, t });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let f = |rho: f64| rho * (r * r + rho * rho - t * t) * u1.eval(rho);
    let quad = Quadrature::new(QUAD_TOL);
    Ok(quad.adaptive_with_breaks(&f, r - t, r + t, &u1.breaks)? / (4.0 * r * r * r))
}

/// Data at `t = 0` of the free wave with past profile `G`.
pub fn data_from_profile(g: &RadiationProfile) -> RadialData {
    let exterior_radius = g.inner.map(|i| i.radius).unwrap_or(0.0);
    let p0 = Arc::new(g.clone());
    let p1 = p0.clone();
    let p2 = p0.clone();
    let moments = |p: &RadiationProfile, r: f64| p.moments(r).unwrap_or((f64::NAN, f64::NAN));
    let u0 = move |r: f64| moments(&p0, r).1 / (r * r * r);
    let du0 = move |r: f64| {
        let m1 = moments(&p1, r).1;
        (p1.value(r) - p1.value(-r)) / (r * r) - 3.0 * m1 / r.powi(4)
    };
    let u1 = move |r: f64| {
        let m0 = moments(&p2, r).0;
        (p2.value(r) + p2.value(-r)) / (r * r) - m0 / (r * r * r)
    };
    let breaks: Vec<f64> = g.breaks.iter().map(|b| b.abs()).filter(|&b| b > 0.0).collect();
    let decay = match g.decay {
        ProfileDecay::Compact { lo, hi } => {
            let from = lo.abs().max(hi.abs()).max(exterior_radius);
            let (m0, m1) = if from > 0.0 { g.moments(from).unwrap_or((f64::NAN, f64::NAN)) } else { (0.0, 0.0) };
            if from > 0.0 {
                DataDecay::InverseCube { from, u0_coeff: m1, u1_coeff: -m0 }
            } else {
                DataDecay::Compact(0.0)
            }
        }
        ProfileDecay::Power(p) => DataDecay::Power { data: (p + 1.0).min(2.0), profile: p },
    };
    RadialData {
        u0: RadialFunction::with_derivative(u0, du0, &breaks),
        u1: RadialFunction::closed(u1, &breaks),
        exterior_radius,
        decay: Some(decay),
    }
}

/// `T(s) = ∫_s^∞ ρ u₁(ρ) dρ`, precomputed at the data's break points so that
/// each evaluation integrates over at most one smooth piece.
struct OddTail {
    data: Arc<RadialData>,
    decay: DataDecay,
    end: f64,
    knots: Vec<f64>,
    at_knots: Vec<f64>,
    quad: Quadrature,
}

impl OddTail {
    fn new(data: Arc<RadialData>, decay: DataDecay, breaks: &[f64], quad: Quadrature) -> Result<Self, RadiationError> {
        let end = match decay {
            DataDecay::Compact(b) | DataDecay::InverseCube { from: b, .. } => b,
            DataDecay::Power { .. } => breaks.iter().fold(data.exterior_radius.max(1.0), |m, &b| m.max(b)),
        };
        let mut knots: Vec<f64> = breaks.iter().copied().filter(|&b| b >= data.exterior_radius && b < end).collect();
        knots.push(end);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut tail = OddTail { data, decay, end, knots, at_knots: Vec::new(), quad };
        let mut acc = tail.beyond(end)?;
        let mut at_knots = vec![acc; tail.knots.len()];
        for i in (0..tail.knots.len() - 1).rev() {
            acc += tail.piece(tail.knots[i], tail.knots[i + 1])?;
            at_knots[i] = acc;
        }
        tail.at_knots = at_knots;
        Ok(tail)
    }

    fn piece(&self, a: f64, b: f64) -> Result<f64, QuadError> {
        let f = |rho: f64| rho * self.data.u1(rho);
        self.quad.adaptive(&f, a, b)
    }

    fn beyond(&self, s: f64) -> Result<f64, RadiationError> {
        Ok(match self.decay {
            DataDecay::Compact(_) => 0.0,
            DataDecay::InverseCube { u1_coeff, .. } => u1_coeff / s,
            DataDecay::Power { data: q, .. } => {
                let f = |rho: f64| rho * self.data.u1(rho);
                self.quad.tail(&f, s, Tail::PowerDecay(q))?
            }
        })
    }

    fn eval(&self, s: f64) -> f64 {
        let out = if s >= self.end {
            self.beyond(s)
        } else {
            let i = self.knots.partition_point(|&k| k < s);
            let k = self.knots[i];
            let head = if s < k { self.piece(s, k).map_err(RadiationError::from) } else { Ok(0.0) };
            head.map(|h| h + self.at_knots[i])
        };
        out.unwrap_or_else(|e| match e {
            RadiationError::Quadrature(q) => q.estimate().unwrap_or(f64::NAN),
            _ => f64::NAN,
        })
    }
}

/// Reconstruct the past profile from data:
/// `G_e(r) = (3r u₀ + r² u₀')/2`, `G_o(s) = ½ s² u₁(s) - ½ ∫_s^∞ ρ u₁`,
/// `G(±s) = ±G_e(s) + G_o(s)` for `s > 0`.
pub fn profile_from_data(d: &RadialData) -> Result<RadiationProfile, RadiationError> {
    let decay = d.decay.ok_or(RadiationError::MissingDecay)?;
    if let DataDecay::Power { data, profile } = decay {
        tail_law(data, 0.0, "the odd-part tail integral")?;
        if !(profile > 1.0) {
            return Err(RadiationError::SlowDecay { p: profile, what: "a radiation profile" });
        }
    }
    let data = Arc::new(d.clone());
    let breaks = d.breaks();
    let quad = Quadrature::new(QUAD_TOL);

    let tail = Arc::new(OddTail::new(data.clone(), decay, &breaks, quad)?);
    let tail_integral = move |s: f64| tail.eval(s);
    let even = {
        let data = data.clone();
        move |r: f64| 0.5 * (3.0 * r * data.u0(r) + r * r * data.du0(r))
    };
    let odd = {
        let data = data.clone();
        let tail_integral = tail_integral.clone();
        move |s: f64| 0.5 * s * s * data.u1(s) - 0.5 * tail_integral(s)
    };

    let mut profile_breaks: Vec<f64> = breaks.iter().flat_map(|&b| [b, -b]).collect();
    profile_breaks.push(0.0);
    let pdecay = match decay {
        DataDecay::Compact(b) | DataDecay::InverseCube { from: b, .. } => {
            check_support(-b, b)?;
            ProfileDecay::Compact { lo: -b, hi: b }
        }
        DataDecay::Power { profile, .. } => ProfileDecay::Power(profile),
    };
    let (even_c, odd_c) = (even.clone(), odd.clone());
    let g = move |s: f64| {
        if s >= 0.0 {
            even_c(s) + odd_c(s)
        } else {
            -even_c(-s) + odd_c(-s)
        }
    };
    let mut out = RadiationProfile::build(Repr::Closed(Arc::new(g)), pdecay, profile_breaks);
    out.reduced_accuracy = !d.has_derivative();
    if out.reduced_accuracy {
        log::warn!("u0 has no derivative access; using finite differences (reduced accuracy)");
        out.quad = Quadrature::new(REDUCED_TOL);
    }
    let re = d.exterior_radius;
    if re > 0.0 {
        let m1 = re.powi(3) * d.u0(re);
        let m0 = 2.0 * re * odd(re) - re.powi(3) * d.u1(re);
        out.inner = Some(InnerMoments { radius: re, m0, m1 });
    }
    Ok(out)
}

/// `σ₄ ∫_R^∞ (|u₀'|² + |u₁|²) ρ⁴ dρ`.
pub fn exterior_energy(d: &RadialData, radius: f64) -> Result<f64, RadiationError> {
    check_radius(radius)?;
    if radius < d.exterior_radius {
        return Err(RadiationError::InvalidRadius(radius));
    }
    Ok(sigma4() * d.energy_density_integral(radius, &Quadrature::new(QUAD_TOL))?)
}

/// `‖(u₀, u₁)‖²` over the whole region where the data are given.
pub fn data_energy(d: &RadialData) -> Result<f64, RadiationError> {
    Ok(sigma4() * d.energy_density_integral(d.exterior_radius, &Quadrature::new(QUAD_TOL))?)
}

/// `σ₄ [2 ‖G‖²_{|s|>R} + M₀(R)²/R + 3 M₁(R)²/R³]`.
pub fn exterior_energy_identity(g: &RadiationProfile, radius: f64) -> Result<f64, RadiationError> {
    check_radius(radius)?;
    let (m0, m1) = g.moments(radius)?;
    let outside = g.norm_sq_outside(radius)?;
    Ok(sigma4() * (2.0 * outside + m0 * m0 / radius + 3.0 * m1 * m1 / radius.powi(3)))
}

/// `τ₁(R) = -R^{-1/2} M₀(R)`, `τ₂(R) = √3 R^{-3/2} M₁(R)`.
pub fn residues(g: &RadiationProfile, radius: f64) -> Result<ResiduePair, RadiationError> {
    check_radius(radius)?;
    let (m0, m1) = g.moments(radius)?;
    Ok(ResiduePair { tau1: -m0 / radius.sqrt(), tau2: 3f64.sqrt() * m1 / radius.powf(1.5), radius })
}

const JUMP_PROBE: f64 = 1e-10;
const JUMP_TOL: f64 = 1e-5;

fn check_continuous(g: &RadiationProfile, r: f64) -> Result<(), RadiationError> {
    let h = JUMP_PROBE * r.abs().max(1.0);
    let jump = (g.value(r + h) - g.value(r - h)).abs();
    if jump > JUMP_TOL * g.value(r).abs().max(1.0) {
        return Err(RadiationError::Discontinuity { r, jump });
    }
    Ok(())
}

/// `(τ₁'(r), τ₂'(r))` from the residues of `G₋` and the profile values at `r`.
pub fn residue_flow(
    g_minus: &RadiationProfile,
    g_plus: &RadiationProfile,
    r: f64,
) -> Result<(f64, f64), RadiationError> {
    check_radius(r)?;
    check_continuous(g_minus, r)?;
    check_continuous(g_plus, r)?;
    let tau = residues(g_minus, r)?;
    let (gm, gp) = (g_minus.value(r), g_plus.value(r));
    let d1 = -tau.tau1 / (2.0 * r) - (gm + gp) / r.sqrt();
    let d2 = -1.5 * tau.tau2 / r + 3f64.sqrt() * (gm - gp) / r.sqrt();
    Ok((d1, d2))
}

/// `(α₁, α₂) = (-∫G, ∫sG)` over the line.
pub fn asymptotic_numbers(g: &RadiationProfile) -> Result<(f64, f64), RadiationError> {
    let (m0, m1) = g.moments(f64::INFINITY)?;
    Ok((-m0, m1))
}

pub fn shift_profile(g: &RadiationProfile, t0: f64) -> Result<RadiationProfile, RadiationError> {
    g.shifted(t0)
}

/// Where a source term `F(t, r)` can be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSupport {
    /// `F = 0` outside `[t0, t1] × [r0, r1]`.
    Box { t0: f64, t1: f64, r0: f64, r1: f64 },
    /// `F(t, r) = 0` unless `|r - t| <= half_width`, and `|F| ≲ (1 + t)^{-decay}`.
    Band { half_width: f64, decay: f64 },
}

/// Change of the outgoing profile produced by a source:
/// `½ ∫₀^∞ (s+t)² F(t, t+s) dt - ½ ∫₀^∞ ∫_{t+s}^∞ ρ F(t, ρ) dρ dt`.
pub fn nonlinear_profile_shift<F>(source: F, support: SourceSupport, s: f64, tol: f64) -> Result<f64, RadiationError>
where
    F: Fn(f64, f64) -> f64,
{
    let quad = Quadrature::new(tol);
    let inner_quad = Quadrature::new(tol * 1e-2);
    let on_cone = |t: f64| {
        let r = t + s;
        if r > 0.0 {
            r * r * source(t, r)
        } else {
            0.0
        }
    };
    match support {
        SourceSupport::Box { t0, t1, r0, r1 } => {
            let (a, b) = (t0.max(0.0), t1);
            if !(a < b) || !(r0 < r1) {
                return Ok(0.0);
            }
            let cone_lo = a.max(r0 - s);
            let cone_hi = b.min(r1 - s);
            let first = if cone_lo < cone_hi { quad.adaptive(&on_cone, cone_lo, cone_hi)? } else { 0.0 };
            let column = |t: f64| {
                let lo = (t + s).max(r0).max(0.0);
                if lo >= r1 {
                    return 0.0;
                }
                let f = |rho: f64| rho * source(t, rho);
                inner_quad.adaptive(&f, lo, r1).unwrap_or_else(|e| e.estimate().unwrap_or(f64::NAN))
            };
            let second = quad.adaptive_with_breaks(&column, a, b, &[r0 - s, r1 - s])?;
            Ok(0.5 * first - 0.5 * second)
        }
        SourceSupport::Band { half_width, decay } => {
            let w = half_width;
            let start = (-s).max(0.0);
            let first = if s.abs() <= w {
                let law = tail_law(decay, 2.0, "the on-cone source integral")?;
                let cut = start + 1.0;
                quad.adaptive(&on_cone, start, cut)? + quad.tail(&on_cone, cut, law)?
            } else {
                0.0
            };
            let column = |t: f64| {
                let lo = (t + s).max(t - w).max(0.0);
                let hi = t + w;
                if lo >= hi {
                    return 0.0;
                }
                let f = |rho: f64| rho * source(t, rho);
                inner_quad.adaptive(&f, lo, hi).unwrap_or_else(|e| e.estimate().unwrap_or(f64::NAN))
            };
            if s > w {
                return Ok(0.5 * first);
            }
            let law = tail_law(decay, 1.0, "the exterior source integral")?;
            let cut = w + 1.0;
            let second = quad.adaptive_with_breaks(&column, 0.0, cut, &[w, (w - s).max(0.0)])? + quad.tail(&column, cut, law)?;
            Ok(0.5 * first - 0.5 * second)
        }
    }
}

/// `√3 r^{3/2} W(r)`: the second residue of the ground-state profile at radius `r`.
pub fn ground_state_tau2(r: f64) -> f64 {
    3f64.sqrt() * r.powf(1.5) * GroundState::default().value(r)
}

/// The radius `c₂ > √15` with `√3 c₂^{3/2} W(c₂) = ρ`.
pub fn compute_c2(rho: f64) -> Result<f64, RadiationError> {
    let peak = 15f64.sqrt();
    let max = ground_state_tau2(peak);
    if !(rho > 0.0 && rho < max) {
        return Err(RadiationError::NoSolution { rho, max });
    }
    let mut lo = peak;
    let mut hi = 2.0 * peak;
    while ground_state_tau2(hi) >= rho {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ground_state_tau2(mid) >= rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn write_profile_csv<W: Write>(g: &RadiationProfile, ds: f64, reach: f64, out: W) -> Result<(), RadiationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "G"])?;
    for (s, v) in g.samples(ds, reach) {
        w.write_record([sig12(s), sig12(v)])?;
    }
    w.flush().map_err(|e| RadiationError::Csv(e.to_string()))?;
    Ok(())
}

fn read_columns<R: Read>(input: R, names: &[&str]) -> Result<Vec<Vec<f64>>, RadiationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| RadiationError::Csv(format!("missing column '{n}'")))
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| RadiationError::Csv(format!("row {}: bad number '{field}'", line + 2)))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Reads columns `s, G` into a sampled profile.
pub fn read_profile_csv<R: Read>(input: R) -> Result<RadiationProfile, RadiationError> {
    let mut cols = read_columns(input, &["s", "G"])?;
    let g = cols.pop().unwrap_or_default();
    let s = cols.pop().unwrap_or_default();
    RadiationProfile::sampled(s, g)
}

pub fn write_data_csv<W: Write>(d: &RadialData, grid: &[f64], out: W) -> Result<(), RadiationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "u0", "u1"])?;
    for row in d.sample(grid) {
        w.write_record(row.iter().map(|&v| sig12(v)))?;
    }
    w.flush().map_err(|e| RadiationError::Csv(e.to_string()))?;
    Ok(())
}

/// Declared behaviour of sampled data past the last row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampledTail {
    /// Zero beyond the last sample.
    Compact,
    /// Exactly `c/r³` beyond the last sample, with `c` taken from that sample.
    InverseCube,
}

/// Reads columns `r, u0, u1`.
pub fn read_data_csv<R: Read>(input: R, tail: SampledTail) -> Result<RadialData, RadiationError> {
    let mut cols = read_columns(input, &["r", "u0", "u1"])?;
    let u1 = cols.pop().unwrap_or_default();
    let u0 = cols.pop().unwrap_or_default();
    let r = cols.pop().unwrap_or_default();
    let (last_r, last_u0, last_u1) = match (r.last(), u0.last(), u1.last()) {
        (Some(&a), Some(&b), Some(&c)) => (a, b, c),
        _ => return Err(RadiationError::Csv("no data rows".into())),
    };
    let decay = match tail {
        SampledTail::Compact => DataDecay::Compact(last_r),
        SampledTail::InverseCube => DataDecay::InverseCube {
            from: last_r,
            u0_coeff: last_u0 * last_r.powi(3),
            u1_coeff: last_u1 * last_r.powi(3),
        },
    };
    RadialData::sampled(r, u0, u1, Some(decay))
}
