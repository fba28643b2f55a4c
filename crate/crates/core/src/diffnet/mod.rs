//! Feed-forward tanh network with exact input derivatives.
//!
//! Every hidden layer propagates the tuple `(u, ∇u, ∇²u)` analytically, so a
//! single forward pass yields the value, input gradient and input Hessian of the
//! scalar output. Parameter gradients of any objective built from those
//! quantities come from one reverse sweep over the recorded layer states
//! ([`Tape::backward`]).

mod adam;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use tape::{hessian_channel, objective_gradient, Order, PointBatch, Tape};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Layer widths, weights and biases of a tanh MLP with a scalar output.
///
/// Parameters are stored in one flat buffer, layer by layer: the row-major
/// weight matrix (`dims[l+1] x dims[l]`) followed by the bias vector.
/// Gradients use the same type and layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

fn layer_offsets(dims: &[usize]) -> Result<Vec<usize>> {
    if dims.len() < 2 {
        return Err(Error::invalid(format!(
            "network needs at least 2 layer widths, got {}",
            dims.len()
        )));
    }
    if let Some(pos) = dims.iter().position(|&w| w == 0) {
        return Err(Error::invalid(format!("layer width {pos} is zero")));
    }
    if *dims.last().unwrap() != 1 {
        return Err(Error::invalid("network output width must be 1"));
    }
    let mut offsets = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for l in 0..dims.len() - 1 {
        offsets.push(acc);
        acc += dims[l + 1] * dims[l] + dims[l + 1];
    }
    offsets.push(acc);
    Ok(offsets)
}

impl NetworkParams {
    /// All-zero parameters.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let offsets = layer_offsets(dims)?;
        let total = *offsets.last().unwrap();
        Ok(Self {
            dims: dims.to_vec(),
            offsets,
            data: vec![0.0; total],
        })
    }

    /// Glorot-uniform weights, zero biases; deterministic in `(dims, seed)`.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        let mut params = Self::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..params.num_layers() {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            let dist = Uniform::new_inclusive(-limit, limit);
            for w in params.weights_mut(l) {
                *w = dist.sample(&mut rng);
            }
        }
        Ok(params)
    }

    /// Builds parameters from per-layer weight matrices (row-major) and biases.
    pub fn from_layers(dims: &[usize], weights: &[Vec<f64>], biases: &[Vec<f64>]) -> Result<Self> {
        let mut params = Self::zeros(dims)?;
        let layers = params.num_layers();
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::invalid(format!(
                "expected {layers} weight and bias blocks, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..layers {
            if weights[l].len() != dims[l + 1] * dims[l] || biases[l].len() != dims[l + 1] {
                return Err(Error::invalid(format!("layer {l} block has the wrong shape")));
            }
            params.weights_mut(l).copy_from_slice(&weights[l]);
            params.biases_mut(l).copy_from_slice(&biases[l]);
        }
        params.check_finite()?;
        Ok(params)
    }

    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            offsets: self.offsets.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// Number of affine layers (`dims.len() - 1`).
    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.data.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let start = self.offsets[layer];
        &self.data[start..start + self.dims[layer + 1] * self.dims[layer]]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let start = self.offsets[layer];
        let len = self.dims[layer + 1] * self.dims[layer];
        &mut self.data[start..start + len]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let start = self.offsets[layer] + self.dims[layer + 1] * self.dims[layer];
        &self.data[start..self.offsets[layer + 1]]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let start = self.offsets[layer] + self.dims[layer + 1] * self.dims[layer];
        let end = self.offsets[layer + 1];
        &mut self.data[start..end]
    }

    /// Flat view over every parameter.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims == other.dims
    }

    pub fn check_finite(&self) -> Result<()> {
        for l in 0..self.num_layers() {
            let start = self.offsets[l];
            if self.data[start..self.offsets[l + 1]].iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric(format!("layer {l}"), "non-finite parameter"));
            }
        }
        Ok(())
    }

    /// Value, input gradient and input Hessian at one point.
    pub fn evaluate(&self, x: &[f64]) -> Result<EvalBundle> {
        let batch = PointBatch::new(self.input_dim(), Order::Hessian, x.to_vec())?;
        let tape = Tape::forward(self, &batch)?;
        let out = tape.outputs();
        let d = self.input_dim();
        let mut hess = vec![0.0; d * d];
        let mut k = 1 + d;
        for i in 0..d {
            for j in i..d {
                hess[i * d + j] = out[k];
                hess[j * d + i] = out[k];
                k += 1;
            }
        }
        Ok(EvalBundle {
            value: out[0],
            grad: out[1..1 + d].to_vec(),
            hess,
        })
    }

    /// Network value only, at every point of a flattened `n x input_dim` array.
    pub fn values(&self, points: &[f64]) -> Result<Vec<f64>> {
        let batch = PointBatch::new(self.input_dim(), Order::Value, points.to_vec())?;
        Ok(Tape::forward_inference(self, &batch)?)
    }
}

/// Output of [`NetworkParams::evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBundle {
    pub value: f64,
    /// `∂u/∂x_i`.
    pub grad: Vec<f64>,
    /// Row-major `d x d` Hessian `∂²u/∂x_i∂x_j`; symmetric by construction.
    pub hess: Vec<f64>,
}

impl EvalBundle {
    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        let d = self.grad.len();
        self.hess[i * d + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let a = NetworkParams::init(&[1, 2, 1], 7).unwrap();
        let b = NetworkParams::init(&[1, 2, 1], 7).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        let c = NetworkParams::init(&[1, 2, 1], 8).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn init_biases_zero() {
        for seed in [0, 1, 99, u64::MAX] {
            let p = NetworkParams::init(&[1, 2, 1], seed).unwrap();
            for l in 0..p.num_layers() {
                assert!(p.biases(l).iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn init_respects_glorot_bound() {
        let dims = [2, 64, 64, 64, 1];
        let p = NetworkParams::init(&dims, 0).unwrap();
        for l in 0..p.num_layers() {
            let bound = (6.0 / (dims[l] + dims[l + 1]) as f64).sqrt();
            let max = p.weights(l).iter().fold(0.0f64, |m, w| m.max(w.abs()));
            assert!(max <= bound, "layer {l}: {max} > {bound}");
            // a 4096-sample uniform draw reaches well into the tails
            if dims[l] * dims[l + 1] >= 64 {
                assert!(max > 0.9 * bound);
            }
        }
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(matches!(NetworkParams::init(&[], 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(NetworkParams::init(&[3], 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(NetworkParams::init(&[1, 0, 1], 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn layout_matches_dims() {
        let p = NetworkParams::init(&[2, 3, 1], 1).unwrap();
        assert_eq!(p.weights(0).len(), 6);
        assert_eq!(p.biases(0).len(), 3);
        assert_eq!(p.weights(1).len(), 3);
        assert_eq!(p.biases(1).len(), 1);
        assert_eq!(p.num_params(), 6 + 3 + 3 + 1);
    }

    #[test]
    fn zero_network_is_constant_zero() {
        let p = NetworkParams::zeros(&[2, 5, 5, 1]).unwrap();
        let b = p.evaluate(&[0.3, -0.7]).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.grad.iter().all(|&g| g == 0.0));
        assert!(b.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn linear_network_has_zero_hessian() {
        let p = NetworkParams::from_layers(&[2, 1], &[vec![1.5, -2.0]], &[vec![0.25]]).unwrap();
        let b = p.evaluate(&[0.4, 1.0]).unwrap();
        assert!((b.value - (1.5 * 0.4 - 2.0 + 0.25)).abs() < 1e-15);
        assert_eq!(b.grad, vec![1.5, -2.0]);
        assert!(b.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = NetworkParams::init(&[2, 4, 1], 3).unwrap();
        assert!(matches!(p.evaluate(&[1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn overflow_reports_layer() {
        let mut p = NetworkParams::init(&[1, 4, 1], 3).unwrap();
        p.weights_mut(0).fill(1.0);
        p.weights_mut(1).fill(f64::MAX);
        p.biases_mut(0).fill(1.0);
        match p.evaluate(&[1.0]) {
            Err(Error::NumericFailure { stage, .. }) => assert!(stage.contains("layer 1"), "{stage}"),
            other => panic!("expected numeric failure, got {other:?}"),
        }
    }
}
