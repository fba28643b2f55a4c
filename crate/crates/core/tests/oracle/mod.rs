// Test-only reference evaluator: plain loops over layers with a full second-order
// jet per neuron. Shares no code with the batched tape.
#![allow(dead_code)]

use nhpinn_core::diffnet::NetworkParams;

#[derive(Clone, Debug)]
pub struct Jet {
    pub v: f64,
    pub g: Vec<f64>,
    pub h: Vec<Vec<f64>>,
}

impl Jet {
    fn constant(v: f64, d: usize) -> Self {
        Jet { v, g: vec![0.0; d], h: vec![vec![0.0; d]; d] }
    }
}

pub fn naive_value(params: &NetworkParams, x: &[f64]) -> f64 {
    let dims = params.dims();
    let mut a: Vec<f64> = x.to_vec();
    for l in 0..params.num_layers() {
        let w = params.weights(l);
        let b = params.biases(l);
        let mut z = vec![0.0; dims[l + 1]];
        for r in 0..dims[l + 1] {
            let mut s = b[r];
            for c in 0..dims[l] {
                s += w[r * dims[l] + c] * a[c];
            }
            z[r] = s;
        }
        a = if l + 1 == params.num_layers() { z } else { z.iter().map(|v| v.tanh()).collect() };
    }
    a[0]
}

pub fn naive_jet(params: &NetworkParams, x: &[f64]) -> Jet {
    let d = x.len();
    let dims = params.dims();
    let mut a: Vec<Jet> = (0..d)
        .map(|i| {
            let mut j = Jet::constant(x[i], d);
            j.g[i] = 1.0;
            j
        })
        .collect();
    for l in 0..params.num_layers() {
        let w = params.weights(l);
        let b = params.biases(l);
        let mut next = Vec::new();
        for r in 0..dims[l + 1] {
            let mut z = Jet::constant(b[r], d);
            for c in 0..dims[l] {
                let wv = w[r * dims[l] + c];
                z.v += wv * a[c].v;
                for i in 0..d {
                    z.g[i] += wv * a[c].g[i];
                    for j in 0..d {
                        z.h[i][j] += wv * a[c].h[i][j];
                    }
                }
            }
            if l + 1 < params.num_layers() {
                let t = z.v.tanh();
                let s1 = 1.0 - t * t;
                let s2 = -2.0 * t * s1;
                let mut o = Jet::constant(t, d);
                for i in 0..d {
                    o.g[i] = s1 * z.g[i];
                    for j in 0..d {
                        o.h[i][j] = s2 * z.g[i] * z.g[j] + s1 * z.h[i][j];
                    }
                }
                next.push(o);
            } else {
                next.push(z);
            }
        }
        a = next;
    }
    a.remove(0)
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den < 1e-12 { num } else { num / den }
}

/// Central-difference gradient and Hessian of the naive value map.
pub fn fd_derivatives(params: &NetworkParams, x: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let d = x.len();
    let f = |dx: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, s) in dx {
            p[i] += s;
        }
        naive_value(params, &p)
    };
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let f0 = f(&[]);
    for i in 0..d {
        grad[i] = (f(&[(i, h)]) - f(&[(i, -h)])) / (2.0 * h);
        hess[i * d + i] = (f(&[(i, h)]) - 2.0 * f0 + f(&[(i, -h)])) / (h * h);
        for j in i + 1..d {
            let v = (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)])
                + f(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[i * d + j] = v;
            hess[j * d + i] = v;
        }
    }
    (grad, hess)
}
