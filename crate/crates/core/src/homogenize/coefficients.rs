use alloc::format;
use alloc::vec::Vec;

use super::average::{periodic_average, GridConvention};
use crate::diffnet::{Order, PointBatch};
use crate::pinn::{Coefficient, Surrogate};
use crate::reference::{Grid, GridSolution};
use crate::{Error, Result};

pub type Tensor2 = [[f64; 2]; 2];

/// Eigenvalues of a symmetric 2x2 tensor, ascending.
pub fn eigenvalues(t: &Tensor2) -> [f64; 2] {
    let m = 0.5 * (t[0][0] + t[1][1]);
    let off = 0.5 * (t[0][1] + t[1][0]);
    let d = libm::sqrt(0.25 * (t[0][0] - t[1][1]).powi(2) + off * off);
    [m - d, m + d]
}

/// Symmetrises and checks positive definiteness.
pub fn check_spd(t: Tensor2) -> Result<Tensor2> {
    if t.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateModel(format!("non-finite homogenized tensor {t:?}")));
    }
    let off = 0.5 * (t[0][1] + t[1][0]);
    let sym = [[t[0][0], off], [off, t[1][1]]];
    let ev = eigenvalues(&sym);
    if ev[0] <= 0.0 {
        return Err(Error::DegenerateModel(format!(
            "homogenized tensor {sym:?} is not positive definite (eigenvalues {ev:?})"
        )));
    }
    Ok(sym)
}

fn periodic_points(period: f64, n: usize, dim: usize) -> Vec<f64> {
    let ys: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    if dim == 1 {
        return ys;
    }
    let mut pts = Vec::with_capacity(2 * n * n);
    for &a in &ys {
        for &b in &ys {
            pts.push(a);
            pts.push(b);
        }
    }
    pts
}

/// `a*_ij = ⟨a (δ_ij + ∂χ_j/∂y_i)⟩` with exact surrogate gradients on the `n x n` periodic grid.
pub fn homogenized_tensor_2d(
    a: &Coefficient,
    chi: [&dyn Surrogate; 2],
    period: f64,
    n: usize,
) -> Result<Tensor2> {
    if chi.iter().any(|c| c.input_dim() != 2) || a.dim() != 2 {
        return Err(Error::invalid("2D cell quantities expected"));
    }
    let pts = periodic_points(period, n, 2);
    let batch = PointBatch::new(2, Order::Gradient, pts)?;
    let grads = [chi[0].eval_batch(&batch)?, chi[1].eval_batch(&batch)?];
    let c = batch.channels();
    let av: Vec<f64> = (0..batch.len()).map(|p| a.eval(batch.point(p))).collect();
    let mut t = [[0.0; 2]; 2];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            let s: Vec<f64> = (0..batch.len())
                .map(|p| av[p] * (delta + grads[j][p * c + 1 + i]))
                .collect();
            *entry = periodic_average(&s, &[n, n], GridConvention::HalfOpen)?;
        }
    }
    check_spd(t)
}

/// Reference path on grid correctors from the cell reference solver: the flux
/// average is taken on cell faces, with face coefficients and one-sided
/// (face-centred) differences matching the solver's stencil.
pub fn homogenized_tensor_2d_reference(a: &Coefficient, chi: [&GridSolution; 2], period: f64) -> Result<Tensor2> {
    let n = match &chi[0].grid {
        Grid::Plane { xs, ys } if xs.len() == ys.len() => xs.len(),
        _ => return Err(Error::invalid("correctors must live on square 2D grids")),
    };
    if chi[1].grid != chi[0].grid {
        return Err(Error::invalid("correctors live on different grids"));
    }
    let h = period / n as f64;
    let idx = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut nodal = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            nodal.push(a.eval(&[p as f64 * h, q as f64 * h]));
        }
    }
    let mut t = [[0.0; 2]; 2];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let v = &chi[j].values;
            let delta = if i == j { 1.0 } else { 0.0 };
            let mut s = Vec::with_capacity(n * n);
            for p in 0..n {
                for q in 0..n {
                    let next = if i == 0 { idx(p + 1, q) } else { idx(p, q + 1) };
                    let here = idx(p, q);
                    let (a0, a1) = (nodal[here], nodal[next]);
                    let face = 2.0 * a0 * a1 / (a0 + a1);
                    s.push(face * (delta + (v[next] - v[here]) / h));
                }
            }
            *entry = periodic_average(&s, &[n, n], GridConvention::HalfOpen)?;
        }
    }
    check_spd(t)
}

/// `a* = ⟨a (1 + χ')⟩` for a 1D cell corrector surrogate.
pub fn homogenized_scalar_1d<S: Surrogate + ?Sized>(a: &Coefficient, chi: &S, period: f64, n: usize) -> Result<f64> {
    let batch = PointBatch::new(1, Order::Gradient, periodic_points(period, n, 1))?;
    let g = chi.eval_batch(&batch)?;
    let s: Vec<f64> = (0..n).map(|p| a.eval(batch.point(p)) * (1.0 + g[2 * p + 1])).collect();
    periodic_average(&s, &[n], GridConvention::HalfOpen)
}

/// `r* = ⟨r N⟩` with the surrogate sampled on the `n`-point periodic grid.
pub fn homogenized_reaction<S: Surrogate + ?Sized>(r: &Coefficient, cell: &S, period: f64, n: usize) -> Result<f64> {
    let batch = PointBatch::new(1, Order::Value, periodic_points(period, n, 1))?;
    let v = cell.eval_batch(&batch)?;
    let s: Vec<f64> = (0..n).map(|p| r.eval(batch.point(p)) * v[p]).collect();
    periodic_average(&s, &[n], GridConvention::HalfOpen)
}

/// Reference path of [`homogenized_reaction`] on a periodic grid solution.
pub fn homogenized_reaction_reference(r: &Coefficient, cell: &GridSolution) -> Result<f64> {
    let Grid::Line(ys) = &cell.grid else {
        return Err(Error::invalid("dr corrector must be 1D"));
    };
    let s: Vec<f64> = ys.iter().zip(&cell.values).map(|(&y, n)| r.eval(&[y]) * n).collect();
    periodic_average(&s, &[ys.len()], GridConvention::HalfOpen)
}
