//! Cell problems and homogenized coefficients.
//!
//! All cell averages are normalised by the period, so `⟨c⟩ = c` for any
//! constant whatever the cell size.

mod average;
mod cell;
mod coefficients;
mod model;
mod solve;

pub use average::{arithmetic_average, harmonic_average, periodic_average, GridConvention};
pub use cell::{CellFamily, CellProblem};
pub use coefficients::{
    check_spd, eigenvalues, homogenized_reaction, homogenized_reaction_reference, homogenized_scalar_1d,
    homogenized_tensor_2d, homogenized_tensor_2d_reference, Tensor2,
};
pub use model::{HomogenizedModel, HomogenizedPayload, Provenance};
pub use solve::{
    cell_collocation, cell_reference, homogenized_field_1d_slow, solve_cell, solve_cell_dr, solve_cell_elliptic_2d,
    CellSolution, CellSolveConfig, FieldMode, SlowCoefficient, SlowField, SlowFieldConfig,
};
