//! Adaptive Gauss-Kronrod integration on finite intervals, the `(1 - y)^{-1/2}`
//! right-endpoint weight, and semi-infinite tails with declared decay.
//!
//! Every routine is pure: the integrand is evaluated at a deterministic
//! sequence of nodes, so repeated calls return bit-identical results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Kronrod abscissae for the 15-point rule (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule (on XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_DEPTH: usize = 60;
const MAX_INTERVALS: usize = 20_000;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("upper limit {b} exceeds the singular endpoint 1")]
    SingularDomain { b: f64 },
    #[error("declared decay exponent {0} is too slow for a convergent tail (need > 1)")]
    SlowDecay(f64),
    #[error("no convergence: estimate {estimate:e} with error bound {error:e}")]
    NoConvergence { estimate: f64, error: f64 },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

impl QuadError {
    /// Best available estimate carried by a non-convergence failure.
    pub fn estimate(&self) -> Option<f64> {
        match self {
            QuadError::NoConvergence { estimate, .. } => Some(*estimate),
            _ => None,
        }
    }
}

/// Behaviour of an integrand near the ends of its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Smooth,
    /// The integrand carries a `(1 - y)^{-1/2}` factor at the right endpoint `1`;
    /// the handle evaluates only the bounded part `f`.
    SqrtSingularRight,
    /// Integrable tail on `[a, ∞)`; the decay must be declared with [`Tail`].
    DecayingTail(Tail),
}

/// Declared behaviour of an integrand on a semi-infinite interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Identically zero beyond the bound.
    CompactSupport(f64),
    /// `|f(x)| = O(x^{-p})` as `x → ∞`.
    PowerDecay(f64),
}

/// A real integrand together with its domain and a smoothness hint.
pub struct Integrand<'a> {
    eval: &'a dyn Fn(f64) -> f64,
    pub lower: f64,
    /// Ignored for [`Smoothness::DecayingTail`].
    pub upper: f64,
    pub smoothness: Smoothness,
}

impl<'a> Integrand<'a> {
    pub fn smooth(eval: &'a dyn Fn(f64) -> f64, lower: f64, upper: f64) -> Self {
        Integrand { eval, lower, upper, smoothness: Smoothness::Smooth }
    }

    pub fn sqrt_singular(eval: &'a dyn Fn(f64) -> f64, lower: f64, upper: f64) -> Self {
        Integrand { eval, lower, upper, smoothness: Smoothness::SqrtSingularRight }
    }

    pub fn tail(eval: &'a dyn Fn(f64) -> f64, lower: f64, tail: Tail) -> Self {
        Integrand { eval, lower, upper: f64::INFINITY, smoothness: Smoothness::DecayingTail(tail) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: usize,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties broken on position so the refinement order never depends on heap internals.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center });
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (xl, xr) = (center - dx, center + dx);
        let (fl, fr) = (f(xl), f(xr));
        if !fl.is_finite() {
            return Err(QuadError::NonFinite { x: xl });
        }
        if !fr.is_finite() {
            return Err(QuadError::NonFinite { x: xr });
        }
        kronrod += w * (fl + fr);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (fl + fr);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok((value, error))
}

/// Adaptive integration settings shared by every routine in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { tol: 1e-10, max_depth: DEFAULT_MAX_DEPTH }
    }
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Quadrature { tol, ..Default::default() }
    }

    fn check_tol(&self) -> Result<(), QuadError> {
        if self.tol > 0.0 && self.tol.is_finite() {
            Ok(())
        } else {
            Err(QuadError::InvalidTolerance(self.tol))
        }
    }

    /// Global adaptive G7/K15 bisection of `[a, b]`.
    ///
    /// The interval with the largest error estimate is split until the summed
    /// estimate drops below `tol` (or below the round-off floor of the result).
    pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> Result<f64, QuadError> {
        self.adaptive_with_breaks(f, a, b, &[])
    }

    /// Like [`Quadrature::adaptive`] but starts from a partition at the given interior
    /// break points (kinks or jumps known in advance). Points outside `(a, b)` are ignored.
    pub fn adaptive_with_breaks<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<f64, QuadError> {
        self.check_tol()?;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(QuadError::InvalidInterval { a, b });
        }
        let mut nodes: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        nodes.insert(0, a);
        nodes.push(b);

        let mut heap = BinaryHeap::new();
        let mut frozen_value = 0.0;
        let mut frozen_error = 0.0;
        let mut running_error = 0.0;
        for w in nodes.windows(2) {
            let (value, error) = kronrod15(f, w[0], w[1])?;
            running_error += error;
            heap.push(Segment { a: w[0], b: w[1], value, error, depth: 0 });
        }

        let summed = |heap: &BinaryHeap<Segment>, frozen_value: f64, frozen_error: f64| {
            let mut total = frozen_value;
            let mut err = frozen_error;
            for s in heap.iter() {
                total += s.value;
                err += s.error;
            }
            (total, err)
        };

        loop {
            if running_error <= self.tol {
                let (total, err) = summed(&heap, frozen_value, frozen_error);
                if err <= self.tol {
                    return Ok(total);
                }
                running_error = err;
            }
            let worst = match heap.pop() {
                Some(s) => s,
                None => {
                    let (total, err) = summed(&heap, frozen_value, frozen_error);
                    return Err(QuadError::NoConvergence { estimate: total, error: err });
                }
            };
            let mid = 0.5 * (worst.a + worst.b);
            if worst.depth >= self.max_depth || !(mid > worst.a && mid < worst.b) {
                // Too deep to split further; keep its contribution and move on.
                frozen_value += worst.value;
                frozen_error += worst.error;
                continue;
            }
            if heap.len() + 2 > MAX_INTERVALS {
                heap.push(worst);
                let (total, err) = summed(&heap, frozen_value, frozen_error);
                let floor = 50.0 * f64::EPSILON * total.abs();
                if err <= floor {
                    return Ok(total);
                }
                return Err(QuadError::NoConvergence { estimate: total, error: err });
            }
            let (lv, le) = kronrod15(f, worst.a, mid)?;
            let (rv, re) = kronrod15(f, mid, worst.b)?;
            let depth = worst.depth + 1;
            running_error += le + re - worst.error;
            heap.push(Segment { a: worst.a, b: mid, value: lv, error: le, depth });
            heap.push(Segment { a: mid, b: worst.b, value: rv, error: re, depth });
            if heap.len() % 64 == 0 {
                // Round-off floor relative to the current total.
                let (total, err) = summed(&heap, frozen_value, frozen_error);
                running_error = err;
                if err <= self.tol.max(50.0 * f64::EPSILON * total.abs()) {
                    return Ok(total);
                }
            }
        }
    }

    /// `∫_a^b f(y) (1 - y)^{-1/2} dy` for bounded `f` and `b ≤ 1`.
    ///
    /// With `y = 1 - τ²` the weight disappears: the integral equals
    /// `∫_{√(1-b)}^{√(1-a)} 2 f(1 - τ²) dτ`.
    pub fn sqrt_singular<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> Result<f64, QuadError> {
        self.sqrt_singular_with_breaks(f, a, b, &[])
    }

    /// As [`Quadrature::sqrt_singular`], with break points given in the original `y` variable.
    pub fn sqrt_singular_with_breaks<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<f64, QuadError> {
        if b > 1.0 {
            return Err(QuadError::SingularDomain { b });
        }
        if !(a < b) {
            return Err(QuadError::InvalidInterval { a, b });
        }
        let lo = (1.0 - b).sqrt();
        let hi = (1.0 - a).sqrt();
        let tau_breaks: Vec<f64> = breaks
            .iter()
            .filter(|&&y| y > a && y < b)
            .map(|&y| (1.0 - y).sqrt())
            .collect();
        let g = |tau: f64| 2.0 * f(1.0 - tau * tau);
        self.adaptive_with_breaks(&g, lo, hi, &tau_breaks)
    }

    /// `∫_a^∞ f`, using the declared tail behaviour.
    ///
    /// Compact support integrates exactly up to the bound. Power decay integrates
    /// over doubling windows `[c, 2c]` until a window contributes less than `tol`;
    /// the geometric remainder implied by the declared exponent is added at the end.
    pub fn tail<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, tail: Tail) -> Result<f64, QuadError> {
        self.check_tol()?;
        if !a.is_finite() {
            return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
        }
        match tail {
            Tail::CompactSupport(hi) => {
                if hi <= a {
                    Ok(0.0)
                } else {
                    self.adaptive(f, a, hi)
                }
            }
            Tail::PowerDecay(p) => {
                if !(p > 1.0) {
                    return Err(QuadError::SlowDecay(p));
                }
                let mut cut = if a > 0.0 { 2.0 * a } else { 1.0 };
                let mut total = self.adaptive(f, a, cut)?;
                let ratio = 2f64.powf(1.0 - p);
                for _ in 0..MAX_DOUBLINGS {
                    let piece = self.adaptive(f, cut, 2.0 * cut)?;
                    total += piece;
                    cut *= 2.0;
                    let remainder = piece * ratio / (1.0 - ratio);
                    if piece.abs() < self.tol && remainder.abs() < self.tol {
                        return Ok(total + remainder);
                    }
                }
                Err(QuadError::NoConvergence { estimate: total, error: f64::NAN })
            }
        }
    }

    /// Dispatch on the handle's smoothness hint.
    pub fn integrate(&self, f: &Integrand<'_>) -> Result<f64, QuadError> {
        match f.smoothness {
            Smoothness::Smooth => self.adaptive(f.eval, f.lower, f.upper),
            Smoothness::SqrtSingularRight => self.sqrt_singular(f.eval, f.lower, f.upper),
            Smoothness::DecayingTail(t) => self.tail(f.eval, f.lower, t),
        }
    }
}

pub fn integrate_adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    Quadrature::new(tol).adaptive(f, a, b)
}

pub fn integrate_sqrt_singular<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    Quadrature::new(tol).sqrt_singular(f, a, b)
}

pub fn integrate_tail<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, tail: Tail, tol: f64) -> Result<f64, QuadError> {
    Quadrature::new(tol).tail(f, a, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_quadratic() {
        let one = integrate_adaptive(&|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        let sq = integrate_adaptive(&|y: f64| y * y, 0.0, 1.0, 1e-12).unwrap();
        assert!((sq - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn kronrod_is_exact_for_degree_22() {
        let (v, _) = kronrod15(&|x: f64| x.powi(22), 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn jump_is_resolved_by_bisection() {
        let f = |r: f64| if (1.0..=2.0).contains(&r) { r } else { 0.0 };
        let v = integrate_tail(&f, 0.0, Tail::CompactSupport(2.0), 1e-10).unwrap();
        assert!((v - 1.5).abs() < 1e-9, "{v}");
        let v = Quadrature::new(1e-13).adaptive_with_breaks(&f, 0.0, 2.0, &[1.0]).unwrap();
        assert!((v - 1.5).abs() < 1e-13);
    }

    #[test]
    fn sqrt_weight() {
        let v = integrate_sqrt_singular(&|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        // ∫_0^1 y (1-y)^{-1/2} dy = 4/3
        let v = integrate_sqrt_singular(&|y| y, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-13);
        assert_eq!(
            integrate_sqrt_singular(&|_| 1.0, 0.0, 1.5, 1e-12),
            Err(QuadError::SingularDomain { b: 1.5 })
        );
    }

    #[test]
    fn tails() {
        assert_eq!(integrate_tail(&|_| 0.0, 0.0, Tail::PowerDecay(3.0), 1e-10).unwrap(), 0.0);
        let v = integrate_tail(&|r: f64| r.powi(-3), 1.0, Tail::PowerDecay(3.0), 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-11, "{v}");
        let v = integrate_tail(&|r: f64| 1.0 / (r * r), 1.0, Tail::PowerDecay(2.0), 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11, "{v}");
        assert_eq!(
            integrate_tail(&|r: f64| 1.0 / r, 1.0, Tail::PowerDecay(1.0), 1e-10),
            Err(QuadError::SlowDecay(1.0))
        );
    }

    #[test]
    fn handle_dispatch() {
        let f = |y: f64| y;
        let q = Quadrature::new(1e-12);
        let v = q.integrate(&Integrand::sqrt_singular(&f, 0.0, 1.0)).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
        let g = |r: f64| r.powi(-4);
        let v = q.integrate(&Integrand::tail(&g, 1.0, Tail::PowerDecay(4.0))).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn non_convergence_carries_estimate() {
        let q = Quadrature { tol: 1e-14, max_depth: 3 };
        let err = q.adaptive(&|x: f64| x.abs().sqrt(), -1.0, 1.0).unwrap_err();
        let est = err.estimate().unwrap();
        assert!((est - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn non_finite_is_reported() {
        let err = integrate_adaptive(&|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { .. } | QuadError::NoConvergence { .. }));
    }

    #[test]
    fn sqrt_singular_matches_truncated_adaptive() {
        // Smooth f: the piece near y = 1 is bounded by 2 sup|f| sqrt(eps).
        let f = |y: f64| (3.0 * y).cos() + y * y;
        let tol = 1e-11;
        let full = integrate_sqrt_singular(&f, 0.0, 1.0, tol).unwrap();
        let eps: f64 = 1e-6;
        let w = |y: f64| f(y) / (1.0 - y).sqrt();
        let head = integrate_adaptive(&w, 0.0, 1.0 - eps, tol).unwrap();
        let bound = 2.0 * 2.0 * eps.sqrt();
        assert!((full - head).abs() <= bound + tol);
        let tail_exact = integrate_sqrt_singular(&f, 1.0 - eps, 1.0, tol).unwrap();
        assert!((full - head - tail_exact).abs() < 1e-9);
    }

    fn poly(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
    }

    proptest! {
        #[test]
        fn linearity(
            p in proptest::collection::vec(-5.0f64..5.0, 1..8),
            q in proptest::collection::vec(-5.0f64..5.0, 1..8),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let tol = 1e-10;
            let combo = |x: f64| alpha * poly(&p, x) + beta * poly(&q, x);
            let lhs = integrate_adaptive(&combo, -1.0, 2.0, tol).unwrap();
            let ip = integrate_adaptive(&|x| poly(&p, x), -1.0, 2.0, tol).unwrap();
            let iq = integrate_adaptive(&|x| poly(&q, x), -1.0, 2.0, tol).unwrap();
            let scale = 1.0 + alpha.abs() + beta.abs();
            prop_assert!((lhs - (alpha * ip + beta * iq)).abs() <= 2.0 * tol * scale);
        }

        #[test]
        fn deterministic(k in 0.1f64..20.0) {
            let f = |x: f64| (k * x).sin() * (-x).exp();
            let a = integrate_adaptive(&f, 0.0, 3.0, 1e-11).unwrap();
            let b = integrate_adaptive(&f, 0.0, 3.0, 1e-11).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
