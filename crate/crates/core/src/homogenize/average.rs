use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Placement of samples on one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridConvention {
    /// Left endpoint included, right excluded; plain mean.
    HalfOpen,
    /// Both endpoints included; trapezoid weights.
    Closed,
}

const MIN_SAMPLES: usize = 8;

fn axis_weights(n: usize, conv: GridConvention) -> Vec<f64> {
    match conv {
        GridConvention::HalfOpen => alloc::vec![1.0 / n as f64; n],
        GridConvention::Closed => {
            let w = 1.0 / (n - 1) as f64;
            (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * w } else { w }).collect()
        }
    }
}

/// Period-normalised average of samples on a tensor-product grid (first axis outermost).
pub fn periodic_average(samples: &[f64], shape: &[usize], conv: GridConvention) -> Result<f64> {
    if shape.is_empty() || shape.len() > 2 {
        return Err(Error::invalid("averages are defined on 1D and 2D grids"));
    }
    if let Some(n) = shape.iter().find(|&&n| n < MIN_SAMPLES) {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples per axis, got {n}")));
    }
    if samples.len() != shape.iter().product::<usize>() {
        return Err(Error::invalid("sample count does not match the grid shape"));
    }
    let w0 = axis_weights(shape[0], conv);
    if shape.len() == 1 {
        return Ok(samples.iter().zip(&w0).map(|(s, w)| s * w).sum());
    }
    let w1 = axis_weights(shape[1], conv);
    Ok(samples
        .chunks(shape[1])
        .zip(&w0)
        .map(|(row, a)| a * row.iter().zip(&w1).map(|(s, b)| s * b).sum::<f64>())
        .sum())
}

fn samples(a: &impl Fn(f64) -> f64, period: f64, n: usize) -> Result<Vec<f64>> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid("period must be positive"));
    }
    let vals: Vec<f64> = (0..n).map(|k| a(period * k as f64 / n as f64)).collect();
    if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::invalid(format!("coefficient must be positive, got {v}")));
    }
    Ok(vals)
}

/// `(⟨1/a⟩)^{-1}` over one period with `n` quadrature nodes.
pub fn harmonic_average(a: impl Fn(f64) -> f64, period: f64, n: usize) -> Result<f64> {
    let inv: Vec<f64> = samples(&a, period, n)?.iter().map(|v| 1.0 / v).collect();
    Ok(1.0 / periodic_average(&inv, &[n], GridConvention::HalfOpen)?)
}

/// `⟨a⟩` over one period with `n` quadrature nodes.
pub fn arithmetic_average(a: impl Fn(f64) -> f64, period: f64, n: usize) -> Result<f64> {
    periodic_average(&samples(&a, period, n)?, &[n], GridConvention::HalfOpen)
}
