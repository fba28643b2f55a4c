//! Training point sets on uniform grids.
//!
//! Periodic problems pair points on opposite edges. Oversampling adds `N_o`
//! layers of exterior points on each side of a periodic axis; every exterior
//! point is matched with the interior grid point one full period away, so the
//! loss can ask the network to repeat itself across the boundary.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Closed interval `[x0, xt]` with `x0 < xt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub x0: f64,
    pub xt: f64,
}

impl Interval {
    pub fn new(x0: f64, xt: f64) -> Result<Self> {
        if !(x0.is_finite() && xt.is_finite() && x0 < xt) {
            return Err(Error::invalid(format!("invalid interval [{x0}, {xt}]")));
        }
        Ok(Self { x0, xt })
    }

    pub fn length(&self) -> f64 {
        self.xt - self.x0
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.x0 - tol && x <= self.xt + tol
    }

    /// `i`-th node of the `n`-point uniform grid; the last node is exactly `xt`.
    fn node(&self, i: usize, n: usize) -> f64 {
        if i + 1 == n {
            self.xt
        } else {
            self.x0 + i as f64 * self.length() / (n - 1) as f64
        }
    }
}

/// `n` equispaced points including both endpoints.
pub fn uniform_grid_1d(domain: Interval, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!("grid needs at least 2 points, got {n}")));
    }
    Ok((0..n).map(|i| domain.node(i, n)).collect())
}

/// Flattened list of points of a fixed dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_coords(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::invalid("coordinates do not match the point dimension"));
        }
        Ok(Self { dim, coords })
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }
}

/// Matched point pairs `(first[i], second[i])`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointPairs {
    pub first: PointSet,
    pub second: PointSet,
}

impl PointPairs {
    pub fn new(dim: usize) -> Self {
        Self {
            first: PointSet::new(dim),
            second: PointSet::new(dim),
        }
    }

    pub fn push(&mut self, a: &[f64], b: &[f64]) {
        self.first.push(a);
        self.second.push(b);
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn extend(&mut self, other: &PointPairs) {
        self.first.coords.extend_from_slice(&other.first.coords);
        self.second.coords.extend_from_slice(&other.second.coords);
    }
}

/// Edge membership of a boundary point of a rectangle; corners belong to two edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Edges {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

/// Tensor-product grid on a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2d {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Points strictly inside the rectangle.
    pub interior: PointSet,
    pub boundary: PointSet,
    pub boundary_edges: Vec<Edges>,
}

impl Grid2d {
    /// Every grid point, `x` index outermost.
    pub fn all_points(&self) -> PointSet {
        let mut set = PointSet::new(2);
        for &x in &self.xs {
            for &y in &self.ys {
                set.push(&[x, y]);
            }
        }
        set
    }

    /// Left edge paired with right edge, bottom with top (corners included).
    pub fn periodic_pairs(&self) -> PointPairs {
        let (x0, xt) = (self.xs[0], *self.xs.last().unwrap());
        let (y0, yt) = (self.ys[0], *self.ys.last().unwrap());
        let mut pairs = PointPairs::new(2);
        for &y in &self.ys {
            pairs.push(&[x0, y], &[xt, y]);
        }
        for &x in &self.xs {
            pairs.push(&[x, y0], &[x, yt]);
        }
        pairs
    }
}

pub fn uniform_grid_2d(x: Interval, y: Interval, nx: usize, ny: usize) -> Result<Grid2d> {
    let xs = uniform_grid_1d(x, nx)?;
    let ys = uniform_grid_1d(y, ny)?;
    let mut interior = PointSet::new(2);
    let mut boundary = PointSet::new(2);
    let mut boundary_edges = Vec::new();
    for (i, &px) in xs.iter().enumerate() {
        for (j, &py) in ys.iter().enumerate() {
            let edges = Edges {
                left: i == 0,
                right: i + 1 == nx,
                bottom: j == 0,
                top: j + 1 == ny,
            };
            if edges == Edges::default() {
                interior.push(&[px, py]);
            } else {
                boundary.push(&[px, py]);
                boundary_edges.push(edges);
            }
        }
    }
    Ok(Grid2d {
        xs,
        ys,
        interior,
        boundary,
        boundary_edges,
    })
}

/// Exterior points and their period-shifted interior partners on one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct OversamplingSets {
    /// `x0 - N_o Δx, ..., x0 - Δx`
    pub q_left: Vec<f64>,
    /// `xt + Δx, ..., xt + N_o Δx`
    pub q_right: Vec<f64>,
    /// `q_left[i] + (xt - x0)`, on the grid.
    pub p_left: Vec<f64>,
    /// `q_right[i] - (xt - x0)`, on the grid.
    pub p_right: Vec<f64>,
}

impl OversamplingSets {
    /// All `(exterior, interior)` pairs, left side first.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.q_left
            .iter()
            .copied()
            .zip(self.p_left.iter().copied())
            .chain(self.q_right.iter().copied().zip(self.p_right.iter().copied()))
    }
}

pub fn oversampling_sets(domain: Interval, n_f: usize, n_o: usize) -> Result<OversamplingSets> {
    if n_f < 4 || n_o < 1 || n_o + 2 >= n_f {
        return Err(Error::invalid(format!(
            "oversampling layers must satisfy 1 <= N_o < N_f - 2 (N_o = {n_o}, N_f = {n_f})"
        )));
    }
    let dx = domain.length() / (n_f - 1) as f64;
    let mut sets = OversamplingSets {
        q_left: Vec::with_capacity(n_o),
        q_right: Vec::with_capacity(n_o),
        p_left: Vec::with_capacity(n_o),
        p_right: Vec::with_capacity(n_o),
    };
    for k in (1..=n_o).rev() {
        sets.q_left.push(domain.x0 - k as f64 * dx);
        sets.p_left.push(domain.node(n_f - 1 - k, n_f));
    }
    for k in 1..=n_o {
        sets.q_right.push(domain.xt + k as f64 * dx);
        sets.p_right.push(domain.node(k, n_f));
    }
    Ok(sets)
}

/// Oversampling pairs for both axes of a periodic rectangle. Each exterior band
/// spans the full edge, corners included, and is matched by a one-period shift.
pub fn oversampling_pairs_2d(
    x: Interval,
    y: Interval,
    nx: usize,
    ny: usize,
    n_o: usize,
) -> Result<PointPairs> {
    let xs = uniform_grid_1d(x, nx)?;
    let ys = uniform_grid_1d(y, ny)?;
    let sx = oversampling_sets(x, nx, n_o)?;
    let sy = oversampling_sets(y, ny, n_o)?;
    let mut pairs = PointPairs::new(2);
    for (q, p) in sx.pairs() {
        for &py in &ys {
            pairs.push(&[q, py], &[p, py]);
        }
    }
    for (q, p) in sy.pairs() {
        for &px in &xs {
            pairs.push(&[px, q], &[px, p]);
        }
    }
    Ok(pairs)
}

/// Point groups of one training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollocationSet {
    /// Residual points `p_i`.
    pub interior: PointSet,
    /// Dirichlet boundary points `q_i`.
    pub boundary: PointSet,
    /// Periodic value-matching pairs across opposite edges.
    pub periodic: PointPairs,
    /// Oversampling pairs `(q_i, p_i)`, exterior first.
    pub oversampling: PointPairs,
    /// Initial-time points `(x, 0)`.
    pub initial: PointSet,
}

impl CollocationSet {
    pub fn dim(&self) -> usize {
        self.interior.dim
    }

    /// Residual on all `n` grid nodes, zero Dirichlet data at both ends.
    pub fn dirichlet_1d(domain: Interval, n: usize) -> Result<Self> {
        let grid = uniform_grid_1d(domain, n)?;
        Ok(Self {
            interior: PointSet::from_coords(1, grid)?,
            boundary: PointSet::from_coords(1, alloc::vec![domain.x0, domain.xt])?,
            ..Self::empty(1)
        })
    }

    /// Residual on all grid nodes, endpoints paired, optional oversampling.
    pub fn periodic_1d(domain: Interval, n: usize, n_o: usize) -> Result<Self> {
        let grid = uniform_grid_1d(domain, n)?;
        let mut set = Self {
            interior: PointSet::from_coords(1, grid)?,
            ..Self::empty(1)
        };
        set.periodic.push(&[domain.x0], &[domain.xt]);
        if n_o > 0 {
            for (q, p) in oversampling_sets(domain, n, n_o)?.pairs() {
                set.oversampling.push(&[q], &[p]);
            }
        }
        Ok(set)
    }

    /// Residual on the interior nodes only: at a corner the zero trace forces
    /// `u_xx = u_yy = 0`, which conflicts with any source that is nonzero there.
    pub fn dirichlet_2d(x: Interval, y: Interval, nx: usize, ny: usize) -> Result<Self> {
        let grid = uniform_grid_2d(x, y, nx, ny)?;
        Ok(Self {
            interior: grid.interior.clone(),
            boundary: grid.boundary.clone(),
            ..Self::empty(2)
        })
    }

    pub fn periodic_2d(x: Interval, y: Interval, nx: usize, ny: usize, n_o: usize) -> Result<Self> {
        let grid = uniform_grid_2d(x, y, nx, ny)?;
        let mut set = Self {
            interior: grid.all_points(),
            periodic: grid.periodic_pairs(),
            ..Self::empty(2)
        };
        if n_o > 0 {
            set.oversampling = oversampling_pairs_2d(x, y, nx, ny, n_o)?;
        }
        Ok(set)
    }

    /// Space-time grid over `x × [0, horizon]`: residual everywhere, Dirichlet at
    /// both spatial ends for all times, initial condition on the `t = 0` row.
    pub fn space_time(x: Interval, nx: usize, horizon: f64, nt: usize) -> Result<Self> {
        let t = Interval::new(0.0, horizon)?;
        let xs = uniform_grid_1d(x, nx)?;
        let ts = uniform_grid_1d(t, nt)?;
        let mut set = Self::empty(2);
        for &px in &xs {
            for &pt in &ts {
                set.interior.push(&[px, pt]);
            }
        }
        for &pt in &ts {
            set.boundary.push(&[x.x0, pt]);
            set.boundary.push(&[x.xt, pt]);
        }
        for &px in &xs {
            set.initial.push(&[px, 0.0]);
        }
        Ok(set)
    }

    fn empty(dim: usize) -> Self {
        Self {
            interior: PointSet::new(dim),
            boundary: PointSet::new(dim),
            periodic: PointPairs::new(dim),
            oversampling: PointPairs::new(dim),
            initial: PointSet::new(dim),
        }
    }
}
