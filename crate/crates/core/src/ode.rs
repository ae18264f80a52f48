//! Dormand-Prince 5(4) with PI step-size control for small autonomous systems.

use thiserror::Error;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e}, state = {state:?})")]
    StepUnderflow { t: f64, h: f64, state: Vec<f64> },
    #[error("exceeded {steps} steps at t = {t}")]
    TooManySteps { t: f64, steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, max_step: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// An accepted solution point with the right-hand side evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Reached,
    Stopped,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrate `y' = rhs(y)` from `t0` to `t_end` (`t_end > t0`).
///
/// Every value in `checkpoints` inside `(t0, t_end)` becomes an accepted node.
/// After each accepted step `stop` is consulted; returning `true` ends the
/// integration with [`Outcome::Stopped`] and that step as the last node.
pub fn integrate<const N: usize, F, S>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    checkpoints: &[f64],
    opts: &OdeOptions,
    mut stop: S,
) -> Result<(Vec<Node<N>>, Outcome), OdeError>
where
    F: Fn(&[f64; N]) -> [f64; N],
    S: FnMut(&Node<N>) -> bool,
{
    let mut marks: Vec<f64> = checkpoints.iter().copied().filter(|&c| c > t0 && c < t_end).collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    marks.push(t_end);
    let mut next_mark = 0;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(&y);
    let mut nodes = vec![Node { t, y, dy: k1 }];
    if t_end <= t0 {
        return Ok((nodes, Outcome::Reached));
    }

    let scale = |y: &[f64; N], z: &[f64; N], i: usize| opts.atol + opts.rtol * y[i].abs().max(z[i].abs());

    // Initial step (Hairer & Wanner, II.4).
    let mut h = {
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..N {
            let sc = scale(&y, &y, i);
            d0 += (y[i] / sc).powi(2);
            d1 += (k1[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(&y, h0, &[(1.0, &k1)]);
        let k2 = rhs(&y1);
        let mut d2 = 0.0;
        for i in 0..N {
            d2 += ((k2[i] - k1[i]) / scale(&y, &y, i)).powi(2);
        }
        let d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(opts.max_step).min(t_end - t0)
    };

    let mut err_old: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps { t, steps });
        }
        steps += 1;
        let target = marks[next_mark];
        let mut hit = false;
        if t + h >= target || t + 1.01 * h >= target {
            h = target - t;
            hit = true;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
            return Err(OdeError::StepUnderflow { t, h, state: y.to_vec() });
        }

        let k2 = rhs(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(&axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(&y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / scale(&y, &y_new, i)).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // Treat as a failed step; shrink hard.
            h *= FAC_MIN;
            rejected = true;
            if h <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
                return Err(OdeError::NonFinite { t });
            }
            continue;
        }

        if err <= 1.0 {
            let mut fac = SAFETY * err.max(1e-10).powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected {
                fac = fac.min(1.0);
            }
            err_old = err.max(1e-4);
            rejected = false;
            t = if hit { target } else { t + h };
            y = y_new;
            k1 = k7;
            let node = Node { t, y, dy: k1 };
            nodes.push(node);
            if hit {
                next_mark += 1;
            }
            if stop(&node) {
                return Ok((nodes, Outcome::Stopped));
            }
            if next_mark >= marks.len() {
                return Ok((nodes, Outcome::Reached));
            }
            h = (h * fac).min(opts.max_step);
        } else {
            let fac = (SAFETY * err.powf(-ALPHA)).max(FAC_MIN);
            h *= fac;
            rejected = true;
        }
    }
}

/// Quintic Hermite interpolation of component `i` between two nodes,
/// using the value, first and second derivative at each end.
pub fn hermite5(t0: f64, p0: [f64; 3], t1: f64, p1: [f64; 3], t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (y0, d0, s0) = (p0[0], p0[1] * h, p0[2] * h * h);
    let (y1, d1, s1) = (p1[0], p1[1] * h, p1[2] * h * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    let value = h00 * y0 + h10 * d0 + h20 * s0 + h01 * y1 + h11 * d1 + h21 * s1;
    let dh00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let dh10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let dh20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let dh01 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let dh11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let dh21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let deriv = (dh00 * y0 + dh10 * d0 + dh20 * s0 + dh01 * y1 + dh11 * d1 + dh21 * s1) / h;
    (value, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let rhs = |y: &[f64; 2]| [y[1], -y[0]];
        let (nodes, out) =
            integrate(rhs, 0.0, [0.0, 1.0], 10.0, &[1.0, 2.5], &OdeOptions::with_tol(1e-11), |_| false).unwrap();
        assert_eq!(out, Outcome::Reached);
        let last = nodes.last().unwrap();
        assert_eq!(last.t, 10.0);
        assert!((last.y[0] - 10f64.sin()).abs() < 1e-9);
        assert!(nodes.iter().any(|n| n.t == 2.5));
    }

    #[test]
    fn stop_predicate() {
        let rhs = |y: &[f64; 1]| [y[0] * y[0]];
        // y = 1/(1-t) blows up at t = 1.
        let (nodes, out) =
            integrate(rhs, 0.0, [1.0], 2.0, &[], &OdeOptions::with_tol(1e-10), |n| n.y[0] > 1e6).unwrap();
        assert_eq!(out, Outcome::Stopped);
        let t = nodes.last().unwrap().t;
        assert!(t > 0.999 && t < 1.0);
    }

    #[test]
    fn hermite_reproduces_quintic() {
        let f = |t: f64| [t.powi(5) - 2.0 * t.powi(3) + t, 5.0 * t.powi(4) - 6.0 * t * t + 1.0, 20.0 * t.powi(3) - 12.0 * t];
        let (v, d) = hermite5(0.3, f(0.3), 1.1, f(1.1), 0.77);
        assert!((v - f(0.77)[0]).abs() < 1e-13);
        assert!((d - f(0.77)[1]).abs() < 1e-12);
    }
}
