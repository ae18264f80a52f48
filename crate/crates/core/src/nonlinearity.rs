//! The focusing power `|u|^{4/3} u`, the scalar weight `g(z) = 2z - |z|^{4/3} z`,
//! and the ground state `W(x) = (1 + |x|²/15)^{-3/2}` with its closed-form derivatives.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{QuadError, Quadrature, Tail};

/// Area of the unit sphere in R^5.
pub fn sigma4() -> f64 {
    8.0 * PI * PI / 3.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// `|u|^{4/3} u`; exactly odd.
pub fn critical_power(u: f64) -> f64 {
    u.abs().powf(4.0 / 3.0) * u
}

/// Derivative of [`critical_power`]: `(7/3)|u|^{4/3}`.
pub fn critical_power_derivative(u: f64) -> f64 {
    7.0 / 3.0 * u.abs().powf(4.0 / 3.0)
}

/// `g(z) = 2z - |z|^{4/3} z`; exactly odd.
pub fn g_function(z: f64) -> f64 {
    2.0 * z - critical_power(z)
}

pub fn g_derivative(z: f64) -> f64 {
    2.0 - critical_power_derivative(z)
}

/// `min{g(z_lo), g(z_hi)}`, the minimum of `g` over `[z_lo, z_hi]` whenever the
/// interval does not straddle an interior minimum (true for every range used here:
/// `g` is unimodal on `[0, ∞)`).
pub fn interval_min_g(z_lo: f64, z_hi: f64) -> f64 {
    g_function(z_lo).min(g_function(z_hi))
}

/// Closed-form landmarks of `g` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GConstants {
    /// Positive zero, `2^{3/4}`.
    pub z0: f64,
    /// Maximiser, `(6/7)^{3/4}`.
    pub z_max: f64,
    /// Maximum value, `(8/7) z_max`.
    pub g_max: f64,
}

impl GConstants {
    pub fn new() -> Self {
        let z_max = (6.0f64 / 7.0).powf(0.75);
        GConstants { z0: 2f64.powf(0.75), z_max, g_max: 8.0 / 7.0 * z_max }
    }
}

impl Default for GConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// The radial ground state and its rescalings `W_λ(r) = λ^{-3/2} W(r/λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundState {
    pub lambda: f64,
}

impl Default for GroundState {
    fn default() -> Self {
        GroundState { lambda: 1.0 }
    }
}

impl GroundState {
    pub fn new(lambda: f64) -> Result<Self, NonlinearityError> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(GroundState { lambda })
        } else {
            Err(NonlinearityError::InvalidScale(lambda))
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let x = r / self.lambda;
        self.lambda.powf(-1.5) * (1.0 + x * x / 15.0).powf(-1.5)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let x = r / self.lambda;
        self.lambda.powf(-2.5) * (-x / 5.0) * (1.0 + x * x / 15.0).powf(-2.5)
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        let x = r / self.lambda;
        let a = 1.0 + x * x / 15.0;
        self.lambda.powf(-3.5) * (-a.powf(-2.5) / 5.0 + x * x / 15.0 * a.powf(-3.5))
    }

    /// `-W'' - (4/r) W' - |W|^{4/3} W`.
    pub fn residual(&self, r: f64) -> Result<f64, NonlinearityError> {
        if !(r > 0.0) {
            return Err(NonlinearityError::InvalidRadius(r));
        }
        Ok(-self.second_derivative(r) - 4.0 / r * self.derivative(r) - critical_power(self.value(r)))
    }

    /// `σ₄ ∫ ρ⁴ |W'|² dρ`.
    pub fn gradient_norm_sq(&self, quad: &Quadrature) -> Result<f64, NonlinearityError> {
        self.radial_integral(quad, |rho| {
            let d = self.derivative(rho);
            d * d
        })
    }

    /// `σ₄ ∫ ρ⁴ W^{10/3} dρ`.
    pub fn potential_integral(&self, quad: &Quadrature) -> Result<f64, NonlinearityError> {
        self.radial_integral(quad, |rho| self.value(rho).powf(10.0 / 3.0))
    }

    /// `E(W_λ, 0) = σ₄ ∫ (½|W'|² - (3/10) W^{10/3}) ρ⁴ dρ`.
    pub fn energy(&self, quad: &Quadrature) -> Result<f64, NonlinearityError> {
        self.radial_integral(quad, |rho| {
            let d = self.derivative(rho);
            0.5 * d * d - 0.3 * self.value(rho).powf(10.0 / 3.0)
        })
    }

    fn radial_integral<F: Fn(f64) -> f64>(&self, quad: &Quadrature, density: F) -> Result<f64, NonlinearityError> {
        // Both densities decay like ρ^{-8} and ρ^{-10}; times ρ⁴ that is ρ^{-4} or faster.
        let split = 20.0 * self.lambda;
        let f = |rho: f64| rho.powi(4) * density(rho);
        let head = quad.adaptive(&f, 0.0, split)?;
        let tail = quad.tail(&f, split, Tail::PowerDecay(4.0))?;
        Ok(sigma4() * (head + tail))
    }
}

/// `(W_λ(r), ∂_r W_λ(r))`.
pub fn ground_state(r: f64, lambda: f64) -> Result<(f64, f64), NonlinearityError> {
    let w = GroundState::new(lambda)?;
    Ok((w.value(r), w.derivative(r)))
}

pub fn ground_state_residual(r: f64) -> Result<f64, NonlinearityError> {
    GroundState::default().residual(r)
}

pub fn ground_state_energy() -> Result<f64, NonlinearityError> {
    GroundState::default().energy(&Quadrature::new(1e-13))
}
