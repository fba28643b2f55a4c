//! Finite-difference reference solvers on uniform grids.
//!
//! Elliptic problems use the conservative flux form: in 1D the coefficient is
//! sampled at half nodes, in 2D each face takes the harmonic mean of its two
//! nodal values. Periodic cell problems wrap the stencil, pin node 0 to remove
//! the constant null space, and subtract the discrete mean afterwards.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::collocation::{uniform_grid_1d, Interval};
use crate::homogenize::{CellFamily, CellProblem};
use crate::linalg::{conjugate_gradient, CsrBuilder, CsrMatrix, Tridiagonal};
use crate::{Error, Result};

/// Relative residual at which sparse solves stop.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Node coordinates of a solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Line(Vec<f64>),
    /// Tensor-product grid; values are stored with `x` outermost.
    Plane { xs: Vec<f64>, ys: Vec<f64> },
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Self::Line(_) => 1,
            Self::Plane { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Line(xs) => xs.len(),
            Self::Plane { xs, ys } => xs.len() * ys.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened node coordinates in value order.
    pub fn points(&self) -> Vec<f64> {
        match self {
            Self::Line(xs) => xs.clone(),
            Self::Plane { xs, ys } => {
                let mut out = Vec::with_capacity(2 * xs.len() * ys.len());
                for &x in xs {
                    for &y in ys {
                        out.push(x);
                        out.push(y);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub scheme: String,
    pub resolution: Vec<usize>,
    pub time_step: Option<f64>,
    /// Time of the stored snapshot, for time-dependent solves.
    pub time: Option<f64>,
}

/// Nodal values of a reference solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub meta: SolverMeta,
}

impl GridSolution {
    pub fn new(grid: Grid, values: Vec<f64>, meta: SolverMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::invalid("value count differs from grid size"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::numeric(meta.scheme.clone(), format!("non-finite nodal value {v}")));
        }
        Ok(Self { grid, values, meta })
    }

    /// Every `stride`-th node along each axis, starting from the first.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("stride must be positive"));
        }
        let (grid, values) = match &self.grid {
            Grid::Line(xs) => {
                let idx: Vec<usize> = (0..xs.len()).step_by(stride).collect();
                (
                    Grid::Line(idx.iter().map(|&i| xs[i]).collect()),
                    idx.iter().map(|&i| self.values[i]).collect(),
                )
            }
            Grid::Plane { xs, ys } => {
                let ix: Vec<usize> = (0..xs.len()).step_by(stride).collect();
                let iy: Vec<usize> = (0..ys.len()).step_by(stride).collect();
                let mut v = Vec::with_capacity(ix.len() * iy.len());
                for &i in &ix {
                    for &j in &iy {
                        v.push(self.values[i * ys.len() + j]);
                    }
                }
                (
                    Grid::Plane {
                        xs: ix.iter().map(|&i| xs[i]).collect(),
                        ys: iy.iter().map(|&j| ys[j]).collect(),
                    },
                    v,
                )
            }
        };
        let mut meta = self.meta.clone();
        meta.resolution = match &grid {
            Grid::Line(xs) => vec![xs.len()],
            Grid::Plane { xs, ys } => vec![xs.len(), ys.len()],
        };
        Ok(Self { grid, values, meta })
    }

    /// Piecewise-linear interpolation of a 1D solution.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let Grid::Line(xs) = &self.grid else {
            return Err(Error::invalid("interpolation is defined for 1D grids"));
        };
        let n = xs.len();
        if n < 2 || x < xs[0] - 1e-12 || x > xs[n - 1] + 1e-12 {
            return Err(Error::invalid(format!("{x} lies outside the grid")));
        }
        let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        Ok(self.values[i - 1] * (1.0 - t) + self.values[i] * t)
    }
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

/// `-(a u')' = f` on `domain`, `u = 0` at both ends, `n` nodes.
pub fn fd_elliptic_1d(a: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64, domain: Interval, n: usize) -> Result<GridSolution> {
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 nodes, got {n}")));
    }
    let xs = uniform_grid_1d(domain, n)?;
    let h = domain.length() / (n - 1) as f64;
    let faces = (0..n - 1)
        .map(|i| positive(a(0.5 * (xs[i] + xs[i + 1])), "coefficient"))
        .collect::<Result<Vec<_>>>()?;
    let m = n - 2;
    let h2 = h * h;
    let diag: Vec<f64> = (0..m).map(|k| (faces[k] + faces[k + 1]) / h2).collect();
    let off: Vec<f64> = (1..m).map(|k| -faces[k] / h2).collect();
    let rhs: Vec<f64> = (1..=m).map(|i| f(xs[i])).collect();
    let inner = Tridiagonal::factor(&off, &diag, &off)?.solve(&rhs);
    let mut values = vec![0.0; n];
    values[1..n - 1].copy_from_slice(&inner);
    GridSolution::new(
        Grid::Line(xs),
        values,
        SolverMeta {
            scheme: "fd-elliptic-1d".into(),
            resolution: vec![n],
            time_step: None,
            time: None,
        },
    )
}

/// Diffusivity of a 2D elliptic solve.
pub enum Diffusivity2d<'a> {
    /// Isotropic `a(x, y)`.
    Scalar(&'a dyn Fn(f64, f64) -> f64),
    /// Constant symmetric tensor.
    Tensor([[f64; 2]; 2]),
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// `-div(A grad u) = f` on `x × y`, `u = 0` on the boundary, `nx × ny` nodes.
pub fn fd_elliptic_2d(
    a: Diffusivity2d<'_>,
    f: impl Fn(f64, f64) -> f64,
    x: Interval,
    y: Interval,
    nx: usize,
    ny: usize,
) -> Result<GridSolution> {
    if nx < 3 || ny < 3 {
        return Err(Error::invalid(format!("need at least 3x3 nodes, got {nx}x{ny}")));
    }
    let xs = uniform_grid_1d(x, nx)?;
    let ys = uniform_grid_1d(y, ny)?;
    let (hx, hy) = (x.length() / (nx - 1) as f64, y.length() / (ny - 1) as f64);
    let (mx, my) = (nx - 2, ny - 2);
    let unknown = |i: usize, j: usize| (i - 1) * my + (j - 1);
    let interior = |i: usize, j: usize| i >= 1 && i <= mx && j >= 1 && j <= my;
    let mut b = CsrBuilder::new(mx * my);
    match a {
        Diffusivity2d::Scalar(coef) => {
            let mut nodal = vec![0.0; nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    nodal[i * ny + j] = positive(coef(xs[i], ys[j]), "coefficient")?;
                }
            }
            let at = |i: usize, j: usize| nodal[i * ny + j];
            for i in 1..=mx {
                for j in 1..=my {
                    let p = at(i, j);
                    let nbrs = [
                        (i + 1, j, harmonic(p, at(i + 1, j)) / (hx * hx)),
                        (i - 1, j, harmonic(p, at(i - 1, j)) / (hx * hx)),
                        (i, j + 1, harmonic(p, at(i, j + 1)) / (hy * hy)),
                        (i, j - 1, harmonic(p, at(i, j - 1)) / (hy * hy)),
                    ];
                    let mut diag = 0.0;
                    for (ni, nj, w) in nbrs {
                        diag += w;
                        if interior(ni, nj) {
                            b.add(unknown(ni, nj), -w);
                        }
                    }
                    b.add(unknown(i, j), diag);
                    b.finish_row();
                }
            }
        }
        Diffusivity2d::Tensor(t) => {
            let (a11, a22) = (positive(t[0][0], "a11")?, positive(t[1][1], "a22")?);
            let a12 = 0.5 * (t[0][1] + t[1][0]);
            if a11 * a22 <= a12 * a12 {
                return Err(Error::invalid("tensor is not positive definite"));
            }
            let c = a12 / (2.0 * hx * hy);
            for i in 1..=mx {
                for j in 1..=my {
                    let nbrs = [
                        (i + 1, j, -a11 / (hx * hx)),
                        (i - 1, j, -a11 / (hx * hx)),
                        (i, j + 1, -a22 / (hy * hy)),
                        (i, j - 1, -a22 / (hy * hy)),
                        (i + 1, j + 1, -c),
                        (i - 1, j - 1, -c),
                        (i + 1, j - 1, c),
                        (i - 1, j + 1, c),
                    ];
                    for (ni, nj, w) in nbrs {
                        if interior(ni, nj) && w != 0.0 {
                            b.add(unknown(ni, nj), w);
                        }
                    }
                    b.add(unknown(i, j), 2.0 * a11 / (hx * hx) + 2.0 * a22 / (hy * hy));
                    b.finish_row();
                }
            }
        }
    }
    let matrix = b.build()?;
    let mut rhs = vec![0.0; mx * my];
    for i in 1..=mx {
        for j in 1..=my {
            rhs[unknown(i, j)] = f(xs[i], ys[j]);
        }
    }
    let sol = solve_spd(&matrix, &rhs, "fd-elliptic-2d")?;
    let mut values = vec![0.0; nx * ny];
    for i in 1..=mx {
        for j in 1..=my {
            values[i * ny + j] = sol[unknown(i, j)];
        }
    }
    GridSolution::new(
        Grid::Plane { xs, ys },
        values,
        SolverMeta {
            scheme: "fd-elliptic-2d".into(),
            resolution: vec![nx, ny],
            time_step: None,
            time: None,
        },
    )
}

fn solve_spd(matrix: &CsrMatrix, rhs: &[f64], scheme: &str) -> Result<Vec<f64>> {
    let max_iter = 20 * matrix.dim() + 100;
    conjugate_gradient(matrix, rhs, CG_TOLERANCE, max_iter)
        .map(|s| s.x)
        .map_err(|e| match e {
            Error::NumericFailure { detail, .. } => Error::numeric(scheme, detail),
            other => other,
        })
}

/// `u_t - D u_xx + c(x) u = f(x, t)` with `u = 0` at both ends.
pub struct ParabolicSetup<'a> {
    pub diffusivity: f64,
    pub reaction: &'a dyn Fn(f64) -> f64,
    pub source: &'a dyn Fn(f64, f64) -> f64,
    pub initial: &'a dyn Fn(f64) -> f64,
    pub domain: Interval,
    pub horizon: f64,
}

/// Implicit Euler with `n` nodes and step `dt`; returns the snapshot at the horizon.
pub fn fd_parabolic_dr(setup: &ParabolicSetup<'_>, n: usize, dt: f64) -> Result<GridSolution> {
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 nodes, got {n}")));
    }
    positive(dt, "time step")?;
    positive(setup.diffusivity, "diffusivity")?;
    positive(setup.horizon, "time horizon")?;
    let steps_f = setup.horizon / dt;
    let steps = libm::round(steps_f) as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f {
        return Err(Error::invalid(format!("horizon {} is not a multiple of dt {dt}", setup.horizon)));
    }
    let xs = uniform_grid_1d(setup.domain, n)?;
    let h = setup.domain.length() / (n - 1) as f64;
    let m = n - 2;
    let k = setup.diffusivity / (h * h);
    let diag = (1..=m)
        .map(|i| {
            let c = (setup.reaction)(xs[i]);
            if c.is_finite() {
                Ok(1.0 / dt + 2.0 * k + c)
            } else {
                Err(Error::invalid(format!("reaction is {c} at x = {}", xs[i])))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let off = vec![-k; m.saturating_sub(1)];
    let lu = Tridiagonal::factor(&off, &diag, &off).map_err(|e| match e {
        Error::NumericFailure { detail, .. } => Error::numeric("fd-parabolic-dr", detail),
        other => other,
    })?;
    let mut u: Vec<f64> = xs[1..=m].iter().map(|&x| (setup.initial)(x)).collect();
    let mut rhs = vec![0.0; m];
    for s in 1..=steps {
        let t = if s == steps { setup.horizon } else { s as f64 * dt };
        for i in 0..m {
            rhs[i] = u[i] / dt + (setup.source)(xs[i + 1], t);
        }
        u = lu.solve(&rhs);
    }
    let mut values = vec![0.0; n];
    values[1..=m].copy_from_slice(&u);
    GridSolution::new(
        Grid::Line(xs),
        values,
        SolverMeta {
            scheme: "fd-parabolic-implicit-euler".into(),
            resolution: vec![n],
            time_step: Some(dt),
            time: Some(setup.horizon),
        },
    )
}

fn subtract_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Periodic 1D flux system with face weight `faces[i]` between nodes `i` and
/// `i + 1 (mod n)`; node 0 is pinned, then the mean is removed.
fn periodic_1d(faces: &[f64], rhs: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = faces.len();
    let h2 = h * h;
    // Unknowns are nodes 1..n; their coupling to node 0 drops out.
    let diag: Vec<f64> = (1..n).map(|i| (faces[i - 1] + faces[i]) / h2).collect();
    let off: Vec<f64> = (1..n - 1).map(|i| -faces[i] / h2).collect();
    let inner = Tridiagonal::factor(&off, &diag, &off)
        .map_err(|e| match e {
            Error::NumericFailure { detail, .. } => Error::numeric("fd-periodic-cell", detail),
            other => other,
        })?
        .solve(&rhs[1..]);
    let mut v = vec![0.0; n];
    v[1..].copy_from_slice(&inner);
    subtract_mean(&mut v);
    Ok(v)
}

/// Zero-mean FD solution of a cell problem on the periodic `n^d` grid
/// (left end included, right end excluded).
pub fn reference_cell_solution(cell: &CellProblem, n: usize) -> Result<GridSolution> {
    if n < 8 {
        return Err(Error::invalid(format!("cell grid needs at least 8 nodes per axis, got {n}")));
    }
    cell.validate()?;
    let h = cell.period / n as f64;
    let ys = cell.periodic_nodes(n);
    let eval1 = |y: f64| cell.coefficient.eval(&[y]);
    let (grid, values) = match cell.family {
        CellFamily::Elliptic1d => {
            let faces = (0..n)
                .map(|i| positive(eval1(ys[i] + 0.5 * h), "cell coefficient"))
                .collect::<Result<Vec<_>>>()?;
            let rhs: Vec<f64> = (0..n).map(|i| (faces[i] - faces[(i + n - 1) % n]) / h).collect();
            (Grid::Line(ys), periodic_1d(&faces, &rhs, h)?)
        }
        CellFamily::Dr { diffusivity } => {
            let faces = vec![diffusivity; n];
            let rhs: Vec<f64> = ys.iter().map(|&y| -eval1(y)).collect();
            (Grid::Line(ys), periodic_1d(&faces, &rhs, h)?)
        }
        CellFamily::Elliptic2d { axis } => {
            let nodal = cell.sample(n);
            if let Some(v) = nodal.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::invalid(format!("cell coefficient must be positive, got {v}")));
            }
            let idx = |i: usize, j: usize| (i % n) * n + (j % n);
            // Face weight between node (i, j) and its +1 neighbour along `dir`.
            let face = |i: usize, j: usize, dir: usize| {
                let (ni, nj) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
                harmonic(nodal[idx(i, j)], nodal[idx(ni, nj)])
            };
            let h2 = h * h;
            let mut b = CsrBuilder::new(n * n - 1);
            let mut rhs = vec![0.0; n * n - 1];
            for i in 0..n {
                for j in 0..n {
                    let k = idx(i, j);
                    if k == 0 {
                        continue;
                    }
                    let nbrs = [
                        (idx(i + 1, j), face(i, j, 0)),
                        (idx(i + n - 1, j), face(i + n - 1, j, 0)),
                        (idx(i, j + 1), face(i, j, 1)),
                        (idx(i, j + n - 1), face(i, j + n - 1, 1)),
                    ];
                    let mut diag = 0.0;
                    for (nk, w) in nbrs {
                        diag += w / h2;
                        if nk != 0 {
                            b.add(nk - 1, -w / h2);
                        }
                    }
                    b.add(k - 1, diag);
                    b.finish_row();
                    rhs[k - 1] = if axis == 0 {
                        (face(i, j, 0) - face(i + n - 1, j, 0)) / h
                    } else {
                        (face(i, j, 1) - face(i, j + n - 1, 1)) / h
                    };
                }
            }
            let sol = solve_spd(&b.build()?, &rhs, "fd-periodic-cell-2d")?;
            let mut v = vec![0.0; n * n];
            v[1..].copy_from_slice(&sol);
            subtract_mean(&mut v);
            (Grid::Plane { xs: ys.clone(), ys }, v)
        }
    };
    let resolution = vec![n; cell.dim()];
    GridSolution::new(
        grid,
        values,
        SolverMeta {
            scheme: "fd-periodic-cell".into(),
            resolution,
            time_step: None,
            time: None,
        },
    )
}
