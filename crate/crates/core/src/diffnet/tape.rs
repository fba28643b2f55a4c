use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::NetworkParams;
use crate::{Error, Result};

/// Highest input-derivative order carried through the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Value,
    Gradient,
    /// Value, gradient and `Σ_{k < axes} ∂²u/∂x_k²` as one extra channel.
    Laplacian { axes: usize },
    Hessian,
}

impl Order {
    /// Channels per point: value, `d` first partials, then either the partial
    /// Laplacian or `d(d+1)/2` second partials (upper triangle, row by row).
    pub fn channels(self, dim: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Gradient => 1 + dim,
            Order::Laplacian { .. } => 2 + dim,
            Order::Hessian => 1 + dim + dim * (dim + 1) / 2,
        }
    }
}

/// Channel index of `∂²u/∂x_i∂x_j` inside a [`Order::Hessian`] tuple.
pub fn hessian_channel(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    let row_start = i * dim - i * i.saturating_sub(1) / 2;
    1 + dim + row_start + (j - i)
}

/// Points sharing an input dimension and derivative order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBatch {
    dim: usize,
    order: Order,
    points: Vec<f64>,
}

impl PointBatch {
    pub fn new(dim: usize, order: Order, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be positive"));
        }
        if let Order::Laplacian { axes } = order {
            if axes == 0 || axes > dim {
                return Err(Error::invalid(format!("Laplacian over {axes} of {dim} axes")));
            }
        }
        if points.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates do not form points of dimension {dim}",
                points.len()
            )));
        }
        Ok(Self { dim, order, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    pub fn channels(&self) -> usize {
        self.order.channels(self.dim)
    }
}

const CHUNK: usize = 256;

#[derive(Debug, Clone)]
struct Layout {
    dim: usize,
    order: Order,
    channels: usize,
    pairs: Vec<(usize, usize)>,
}

impl Layout {
    fn new(dim: usize, order: Order) -> Self {
        let mut pairs = Vec::new();
        if order == Order::Hessian {
            for i in 0..dim {
                for j in i..dim {
                    pairs.push((i, j));
                }
            }
        }
        Self {
            dim,
            order,
            channels: order.channels(dim),
            pairs,
        }
    }
}

#[derive(Debug, Clone)]
struct ChunkState {
    n: usize,
    /// Input tuple of every affine layer.
    acts: Vec<Vec<f64>>,
    /// Pre-activation tuple of every hidden layer.
    pre: Vec<Vec<f64>>,
}

/// Recorded forward pass over a [`PointBatch`].
///
/// Outputs are stored point-major: `outputs()[p * C + c]` is channel `c` of point `p`.
#[derive(Debug, Clone)]
pub struct Tape {
    layout: Layout,
    n_points: usize,
    chunks: Vec<ChunkState>,
    outputs: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
    csc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!((m - 1) * rsa + (k - 1) * csa < a.len());
        assert!((k - 1) * rsb + (n - 1) * csb < b.len());
    }
    assert!((m - 1) * rsc + (n - 1) * csc < c.len());
    // SAFETY: every index the kernel touches was bounds-checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

#[inline]
fn exp(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.exp()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::exp(x)
    }
}

/// `tanh` through one exponential; absolute error stays at the rounding level.
#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    1.0 - 2.0 / (exp(2.0 * x) + 1.0)
}

fn activation_forward(layout: &Layout, z: &[f64], a: &mut [f64]) {
    let c = layout.channels;
    let d = layout.dim;
    for (zt, at) in z.chunks_exact(c).zip(a.chunks_exact_mut(c)) {
        let t = tanh(zt[0]);
        let s1 = 1.0 - t * t;
        at[0] = t;
        if layout.order >= Order::Gradient {
            for i in 0..d {
                at[1 + i] = s1 * zt[1 + i];
            }
        }
        match layout.order {
            Order::Hessian => {
                let s2 = -2.0 * t * s1;
                for (k, &(i, j)) in layout.pairs.iter().enumerate() {
                    at[1 + d + k] = s2 * zt[1 + i] * zt[1 + j] + s1 * zt[1 + d + k];
                }
            }
            Order::Laplacian { axes } => {
                let s2 = -2.0 * t * s1;
                let sq: f64 = zt[1..1 + axes].iter().map(|g| g * g).sum();
                at[1 + d] = s2 * sq + s1 * zt[1 + d];
            }
            _ => {}
        }
    }
}

/// Turns the adjoint of an activation tuple into the adjoint of its input, in place.
fn activation_backward(layout: &Layout, bar: &mut [f64], z: &[f64], a: &[f64], scratch: &mut [f64]) {
    let c = layout.channels;
    let d = layout.dim;
    for ((bt, zt), at) in bar.chunks_exact_mut(c).zip(z.chunks_exact(c)).zip(a.chunks_exact(c)) {
        let t = at[0];
        let s1 = 1.0 - t * t;
        let s2 = -2.0 * t * s1;
        let mut zv = bt[0] * s1;
        if layout.order >= Order::Gradient {
            for i in 0..d {
                scratch[i] = bt[1 + i] * s1;
                zv += bt[1 + i] * zt[1 + i] * s2;
            }
        }
        match layout.order {
            Order::Hessian => {
                let s3 = s1 * (6.0 * t * t - 2.0);
                for (k, &(i, j)) in layout.pairs.iter().enumerate() {
                    let ah = bt[1 + d + k];
                    zv += ah * (s3 * zt[1 + i] * zt[1 + j] + s2 * zt[1 + d + k]);
                    scratch[i] += ah * s2 * zt[1 + j];
                    scratch[j] += ah * s2 * zt[1 + i];
                    bt[1 + d + k] = ah * s1;
                }
            }
            Order::Laplacian { axes } => {
                let s3 = s1 * (6.0 * t * t - 2.0);
                let ah = bt[1 + d];
                let sq: f64 = zt[1..1 + axes].iter().map(|g| g * g).sum();
                zv += ah * (s3 * sq + s2 * zt[1 + d]);
                for k in 0..axes {
                    scratch[k] += 2.0 * ah * s2 * zt[1 + k];
                }
                bt[1 + d] = ah * s1;
            }
            _ => {}
        }
        bt[0] = zv;
        if layout.order >= Order::Gradient {
            bt[1..1 + d].copy_from_slice(&scratch[..d]);
        }
    }
}

fn check_layer(values: &[f64], layer: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(format!("layer {layer}"), "non-finite activation"))
    }
}

fn forward_chunk(
    params: &NetworkParams,
    layout: &Layout,
    pts: &[f64],
    store: bool,
) -> Result<(Vec<f64>, Option<ChunkState>)> {
    let d = layout.dim;
    let c = layout.channels;
    let n = pts.len() / d;
    let cols = n * c;
    let mut a = vec![0.0; d * cols];
    for p in 0..n {
        for i in 0..d {
            a[i * cols + p * c] = pts[p * d + i];
            if layout.order >= Order::Gradient {
                a[i * cols + p * c + 1 + i] = 1.0;
            }
        }
    }
    let layers = params.num_layers();
    let mut acts = Vec::new();
    let mut pre = Vec::new();
    for l in 0..layers {
        let (inp, out) = (params.dims[l], params.dims[l + 1]);
        let mut z = vec![0.0; out * cols];
        gemm(out, inp, cols, 1.0, params.weights(l), inp, 1, &a, cols, 1, 0.0, &mut z, cols, 1);
        for (r, &b) in params.biases(l).iter().enumerate() {
            let row = &mut z[r * cols..(r + 1) * cols];
            for p in 0..n {
                row[p * c] += b;
            }
        }
        check_layer(&z, l)?;
        if l + 1 == layers {
            if store {
                acts.push(a);
            }
            let state = store.then_some(ChunkState { n, acts, pre });
            return Ok((z, state));
        }
        let mut next = vec![0.0; out * cols];
        activation_forward(layout, &z, &mut next);
        if store {
            acts.push(a);
            pre.push(z);
        }
        a = next;
    }
    unreachable!("network has at least one layer")
}

impl Tape {
    /// Runs the network over `batch`, keeping every layer state for [`Tape::backward`].
    pub fn forward(params: &NetworkParams, batch: &PointBatch) -> Result<Self> {
        Self::run(params, batch, true)
    }

    /// Forward pass that keeps only the outputs.
    pub fn forward_inference(params: &NetworkParams, batch: &PointBatch) -> Result<Vec<f64>> {
        Ok(Self::run(params, batch, false)?.outputs)
    }

    fn run(params: &NetworkParams, batch: &PointBatch, store: bool) -> Result<Self> {
        if batch.dim() != params.input_dim() {
            return Err(Error::invalid(format!(
                "point dimension {} does not match network input {}",
                batch.dim(),
                params.input_dim()
            )));
        }
        let layout = Layout::new(batch.dim(), batch.order());
        let mut outputs = Vec::with_capacity(batch.len() * layout.channels);
        let mut chunks = Vec::new();
        for pts in batch.coords().chunks(CHUNK * batch.dim()) {
            let (out, state) = forward_chunk(params, &layout, pts, store)?;
            outputs.extend_from_slice(&out);
            if let Some(state) = state {
                chunks.push(state);
            }
        }
        Ok(Self {
            layout,
            n_points: batch.len(),
            chunks,
            outputs,
        })
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn channels(&self) -> usize {
        self.layout.channels
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Accumulates `Σ adjoint · ∂outputs/∂params` into `grad`.
    ///
    /// `adjoint` has the layout of [`Tape::outputs`].
    pub fn backward(&self, params: &NetworkParams, adjoint: &[f64], grad: &mut NetworkParams) -> Result<()> {
        let c = self.layout.channels;
        if adjoint.len() != self.n_points * c {
            return Err(Error::invalid(format!(
                "adjoint has {} entries, expected {}",
                adjoint.len(),
                self.n_points * c
            )));
        }
        if !grad.same_shape(params) {
            return Err(Error::invalid("gradient buffer shape differs from parameters"));
        }
        if self.chunks.len() * CHUNK < self.n_points {
            return Err(Error::invalid("tape was recorded without layer states"));
        }
        let layers = params.num_layers();
        let mut scratch = vec![0.0; self.layout.dim.max(1)];
        let mut start = 0;
        for chunk in &self.chunks {
            let cols = chunk.n * c;
            let mut bar = adjoint[start..start + cols].to_vec();
            start += cols;
            for l in (0..layers).rev() {
                let (inp, out) = (params.dims[l], params.dims[l + 1]);
                let a = &chunk.acts[l];
                gemm(out, cols, inp, 1.0, &bar, cols, 1, a, 1, cols, 1.0, grad.weights_mut(l), inp, 1);
                for (r, gb) in grad.biases_mut(l).iter_mut().enumerate() {
                    let row = &bar[r * cols..(r + 1) * cols];
                    *gb += row.iter().step_by(c).sum::<f64>();
                }
                if l == 0 {
                    break;
                }
                let mut abar = vec![0.0; inp * cols];
                gemm(inp, out, cols, 1.0, params.weights(l), 1, inp, &bar, cols, 1, 0.0, &mut abar, cols, 1);
                activation_backward(&self.layout, &mut abar, &chunk.pre[l - 1], a, &mut scratch);
                bar = abar;
            }
        }
        Ok(())
    }
}

/// Value and parameter gradient of an objective built from network outputs.
///
/// `objective` receives the outputs of every batch (layout of [`Tape::outputs`])
/// and returns the scalar objective together with its derivative with respect to
/// each output entry.
pub fn objective_gradient<F>(
    params: &NetworkParams,
    batches: &[PointBatch],
    objective: F,
) -> Result<(f64, NetworkParams)>
where
    F: FnOnce(&[&[f64]]) -> Result<(f64, Vec<Vec<f64>>)>,
{
    let tapes = batches
        .iter()
        .map(|b| Tape::forward(params, b))
        .collect::<Result<Vec<_>>>()?;
    let outputs: Vec<&[f64]> = tapes.iter().map(|t| t.outputs()).collect();
    let (value, adjoints) = objective(&outputs)?;
    if !value.is_finite() {
        return Err(Error::numeric("objective", format!("objective value {value}")));
    }
    if adjoints.len() != tapes.len() {
        return Err(Error::invalid("objective returned the wrong number of adjoint blocks"));
    }
    let mut grad = params.zeros_like();
    for (tape, adj) in tapes.iter().zip(&adjoints) {
        tape.backward(params, adj, &mut grad)?;
    }
    grad.check_finite()
        .map_err(|_| Error::numeric("objective gradient", "non-finite parameter gradient"))?;
    Ok((value, grad))
}
