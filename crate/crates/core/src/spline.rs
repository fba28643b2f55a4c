//! Natural cubic spline through samples on a strictly increasing grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::solve_tridiagonal;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::invalid("spline needs at least 3 matching samples"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let k = n - 2;
        let diag: Vec<f64> = (0..k).map(|i| 2.0 * (h[i] + h[i + 1])).collect();
        let off: Vec<f64> = (1..k).map(|i| h[i]).collect();
        let rhs: Vec<f64> = (0..k)
            .map(|i| 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]))
            .collect();
        let inner = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn samples(&self) -> &[f64] {
        &self.ys
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|k| k.partial_cmp(&x).unwrap_or(core::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Value and first derivative; outside the knot range the end cubic is extended.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let value = a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (value, slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        for x in [0.0, 0.17, 0.9, 1.49, 1.5] {
            let (v, d) = s.eval(x);
            assert!((v - (2.0 * x - 1.0)).abs() < 1e-13);
            assert!((d - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_knots_and_converges() {
        let n = 201;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * core::f64::consts::PI / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| libm::sin(x)).collect();
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x).0 - y).abs() < 1e-14);
        }
        let (v, d) = s.eval(1.0001);
        assert!((v - libm::sin(1.0001)).abs() < 1e-8);
        assert!((d - libm::cos(1.0001)).abs() < 1e-6);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(CubicSpline::natural(&[0.0, 1.0, 0.5], &[0.0; 3]).is_err());
    }
}
