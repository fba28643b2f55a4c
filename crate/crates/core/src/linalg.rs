//! Small sparse/banded solvers backing the finite-difference references.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// LU factors of a tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    /// Modified diagonal after elimination.
    pivots: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` couples row `i+1` to column `i`; `upper[i]` couples row `i` to `i+1`.
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::invalid("tridiagonal bands have inconsistent lengths"));
        }
        let mut pivots = vec![0.0; n];
        pivots[0] = diag[0];
        for i in 1..n {
            if pivots[i - 1] == 0.0 || !pivots[i - 1].is_finite() {
                return Err(Error::numeric("tridiagonal solve", format!("zero pivot at row {}", i - 1)));
            }
            pivots[i] = diag[i] - lower[i - 1] * upper[i - 1] / pivots[i - 1];
        }
        if pivots[n - 1] == 0.0 || !pivots[n - 1].is_finite() {
            return Err(Error::numeric("tridiagonal solve", format!("zero pivot at row {}", n - 1)));
        }
        Ok(Self {
            lower: lower.to_vec(),
            pivots,
            upper: upper.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] -= self.lower[i - 1] / self.pivots[i - 1] * y[i - 1];
        }
        y[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (y[i] - self.upper[i] * y[i + 1]) / self.pivots[i];
        }
        y
    }
}

pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    Ok(Tridiagonal::factor(lower, diag, upper)?.solve(rhs))
}

/// Compressed sparse row matrix assembled from row-ordered triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row CSR builder.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Adds an entry to the current row, merging with an existing column entry.
    pub fn add(&mut self, col: usize, val: f64) {
        let start = *self.row_ptr.last().unwrap();
        if let Some(k) = self.cols[start..].iter().position(|&c| c == col) {
            self.vals[start + k] += val;
        } else {
            self.cols.push(col);
            self.vals.push(val);
        }
    }

    pub fn finish_row(&mut self) {
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> Result<CsrMatrix> {
        if self.row_ptr.len() != self.n + 1 {
            return Err(Error::invalid(format!(
                "matrix has {} finished rows, expected {}",
                self.row_ptr.len() - 1,
                self.n
            )));
        }
        Ok(CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        })
    }
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }
}

/// Outcome of a converged conjugate-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - Ax‖ / ‖b‖` at exit.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite matrix.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid("right-hand side length differs from matrix size"));
    }
    let bnorm = libm::sqrt(dot(b, b));
    if bnorm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 0..max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::numeric(
                "conjugate gradient",
                format!("matrix not positive definite along search direction (p'Ap = {pap:e})"),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = libm::sqrt(dot(&r, &r)) / bnorm;
        if res < tol {
            return Ok(CgSolution {
                x,
                iterations: it + 1,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numeric(
        "conjugate gradient",
        format!("no convergence after {max_iter} iterations, relative residual {res:e}"),
    ))
}
