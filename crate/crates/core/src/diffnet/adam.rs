use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::NetworkParams;
use crate::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators and step count for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl AdamState {
    pub fn new(params: &NetworkParams, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: vec![0.0; params.num_params()],
            second: vec![0.0; params.num_params()],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    /// One bias-corrected Adam update of `params` along `grad`.
    pub fn step(&mut self, params: &mut NetworkParams, grad: &NetworkParams) -> Result<()> {
        if !params.same_shape(grad) || params.num_params() != self.first.len() {
            return Err(Error::invalid(format!(
                "adam shape mismatch: params {:?}, grad {:?}, state {} entries",
                params.dims(),
                grad.dims(),
                self.first.len()
            )));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        let it = params
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(self.first.iter_mut().zip(self.second.iter_mut()));
        for ((p, &g), (m, v)) in it {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_state_is_zero() {
        let p = NetworkParams::init(&[2, 4, 1], 0).unwrap();
        let s = AdamState::new(&p, AdamConfig::default());
        assert_eq!(s.step_count(), 0);
        assert!(s.first_moment().iter().chain(s.second_moment()).all(|&m| m == 0.0));
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = NetworkParams::init(&[2, 4, 1], 0).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        let zero = p.zeros_like();
        s.step(&mut p, &zero).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_hand_computed() {
        // single scalar parameter: u = w x, dims [1, 1]
        let mut p = NetworkParams::from_layers(&[1, 1], &[vec![0.5]], &[vec![0.0]]).unwrap();
        let mut g = p.zeros_like();
        g.weights_mut(0)[0] = 1.0;
        let mut s = AdamState::new(&p, AdamConfig::with_learning_rate(0.1));
        s.step(&mut p, &g).unwrap();
        // m = 0.1, v = 0.001; m_hat = 1, v_hat = 1; update = 0.1 / (1 + 1e-8)
        let expected = 0.5 - 0.1 / (1.0 + 1e-8);
        assert!((p.weights(0)[0] - expected).abs() < 1e-15);
        assert_eq!(p.biases(0)[0], 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = NetworkParams::init(&[2, 4, 1], 0).unwrap();
        let g = NetworkParams::init(&[2, 3, 1], 0).unwrap();
        let mut s = AdamState::new(&p, AdamConfig::default());
        assert!(matches!(s.step(&mut p, &g), Err(Error::InvalidArgument(_))));
    }
}
