//! Piecewise-cubic interpolation of tabulated data.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("need at least 4 samples, got {0}")]
    TooShort(usize),
    #[error("abscissae and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("abscissae must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// Local four-point Lagrange interpolation on a strictly increasing grid.
///
/// Each evaluation uses the cubic through the two nodes bracketing the point and
/// one neighbour on each side (shifted inward at the ends).
#[derive(Debug, Clone, PartialEq)]
pub struct CubicTable {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl CubicTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, TableError> {
        if x.len() != y.len() {
            return Err(TableError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 4 {
            return Err(TableError::TooShort(x.len()));
        }
        for i in 0..x.len() {
            if !x[i].is_finite() || !y[i].is_finite() {
                return Err(TableError::NonFinite(i));
            }
            if i > 0 && !(x[i] > x[i - 1]) {
                return Err(TableError::NotIncreasing(i));
            }
        }
        Ok(CubicTable { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn stencil(&self, t: f64) -> Option<usize> {
        if !(t >= self.lo() && t <= self.hi()) {
            return None;
        }
        let i = self.x.partition_point(|&v| v <= t).saturating_sub(1);
        Some(i.saturating_sub(1).min(self.x.len() - 4))
    }

    /// Interpolated value; `None` outside `[lo, hi]`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let j = self.stencil(t)?;
        let xs = &self.x[j..j + 4];
        let ys = &self.y[j..j + 4];
        let mut acc = 0.0;
        for k in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != k {
                    l *= (t - xs[m]) / (xs[k] - xs[m]);
                }
            }
            acc += ys[k] * l;
        }
        Some(acc)
    }

    /// Derivative of the local cubic; `None` outside `[lo, hi]`.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        let j = self.stencil(t)?;
        let xs = &self.x[j..j + 4];
        let ys = &self.y[j..j + 4];
        let mut acc = 0.0;
        for k in 0..4 {
            let mut denom = 1.0;
            for m in 0..4 {
                if m != k {
                    denom *= xs[k] - xs[m];
                }
            }
            let mut num = 0.0;
            for skip in 0..4 {
                if skip == k {
                    continue;
                }
                let mut p = 1.0;
                for m in 0..4 {
                    if m != k && m != skip {
                        p *= t - xs[m];
                    }
                }
                num += p;
            }
            acc += ys[k] * num / denom;
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
        let f = |t: f64| 2.0 - t + 0.5 * t * t - 0.1 * t * t * t;
        let df = |t: f64| -1.0 + t - 0.3 * t * t;
        let table = CubicTable::new(x.clone(), x.iter().map(|&t| f(t)).collect()).unwrap();
        for i in 0..=200 {
            let t = table.lo() + (table.hi() - table.lo()) * i as f64 / 200.0;
            assert!((table.eval(t).unwrap() - f(t)).abs() < 1e-11);
            assert!((table.derivative(t).unwrap() - df(t)).abs() < 1e-10);
        }
        assert_eq!(table.eval(table.hi() + 1e-9), None);
    }

    #[test]
    fn hits_nodes() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![1.0, -1.0, 4.0, 0.5, 2.0];
        let table = CubicTable::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((table.eval(*a).unwrap() - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(CubicTable::new(vec![0.0, 1.0, 2.0], vec![0.0; 3]), Err(TableError::TooShort(3)));
        assert_eq!(
            CubicTable::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]),
            Err(TableError::NotIncreasing(2))
        );
        assert_eq!(CubicTable::new(vec![0.0; 4], vec![0.0; 5]), Err(TableError::LengthMismatch(4, 5)));
    }
}
