use std::f64::consts::PI;
use std::sync::Arc;

use nhpinn_core::diffnet::EvalBundle;
use nhpinn_core::homogenize::{
    eigenvalues, harmonic_average, homogenized_field_1d_slow, homogenized_reaction, homogenized_reaction_reference,
    homogenized_scalar_1d, homogenized_tensor_2d, homogenized_tensor_2d_reference, solve_cell, CellProblem,
    CellSolveConfig, FieldMode, HomogenizedModel, Provenance, SlowCoefficient,
};
use nhpinn_core::pinn::{AnalyticSurrogate, Coefficient, LossWeights, TrainConfig};
use nhpinn_core::reference::reference_cell_solution;
use nhpinn_core::Error;
use proptest::prelude::*;

fn layered() -> Coefficient {
    Coefficient::with_gradient(
        2,
        |y| 15.0 * (2.0 * PI * y[0]).sin().powi(2) + 1.0,
        |y, g| {
            g[0] = 30.0 * 2.0 * PI * (2.0 * PI * y[0]).sin() * (2.0 * PI * y[0]).cos();
            g[1] = 0.0;
        },
    )
}

fn checkerboard_cell() -> Coefficient {
    Coefficient::with_gradient(
        2,
        |y| 2.0 + (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).cos(),
        |y, g| {
            g[0] = 2.0 * PI * (2.0 * PI * y[0]).cos() * (2.0 * PI * y[1]).cos();
            g[1] = -2.0 * PI * (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).sin();
        },
    )
}

fn reference_tensor(a: &Coefficient, n: usize) -> [[f64; 2]; 2] {
    let c0 = reference_cell_solution(&CellProblem::elliptic_2d(a.clone(), 0, 1.0).unwrap(), n).unwrap();
    let c1 = reference_cell_solution(&CellProblem::elliptic_2d(a.clone(), 1, 1.0).unwrap(), n).unwrap();
    homogenized_tensor_2d_reference(a, [&c0, &c1], 1.0).unwrap()
}

#[test]
fn layered_medium_reference_path_matches_closed_forms() {
    let t = reference_tensor(&layered(), 128);
    assert!((t[0][0] - 4.0).abs() < 1e-3, "{t:?}");
    assert!((t[1][1] - 8.5).abs() < 1e-3, "{t:?}");
    assert!(t[0][1].abs() < 1e-3 && t[1][0].abs() < 1e-3);
    // Voigt-Reuss bounds.
    for d in [t[0][0], t[1][1]] {
        assert!((4.0 - 1e-3..=8.5 + 1e-3).contains(&d));
    }
}

#[test]
fn checkerboard_cell_reference_tensor_is_spd_and_isotropic() {
    let t = reference_tensor(&checkerboard_cell(), 64);
    let ev = eigenvalues(&t);
    assert!(ev[0] > 0.0);
    assert!((t[0][0] - t[1][1]).abs() < 1e-6, "{t:?}");
    assert!(t[0][1].abs() < 1e-8);
    // Strictly between the harmonic and arithmetic means of a.
    assert!(t[0][0] < 2.0 && t[0][0] > 1.8, "{t:?}");
}

fn zero_2d() -> AnalyticSurrogate<impl Fn(&[f64]) -> EvalBundle> {
    AnalyticSurrogate::new(2, |_: &[f64]| EvalBundle {
        value: 0.0,
        grad: vec![0.0; 2],
        hess: vec![0.0; 4],
    })
}

#[test]
fn constant_coefficient_neural_path_is_identity() {
    let z = zero_2d();
    let t = homogenized_tensor_2d(&Coefficient::constant(2, 2.7), [&z, &z], 1.0, 16).unwrap();
    for (i, row) in t.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 2.7 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }
}

#[test]
fn failed_corrector_gives_degenerate_tensor() {
    // χ_1 = -2 y_1 drives a*_11 negative.
    let bad = AnalyticSurrogate::new(2, |_: &[f64]| EvalBundle {
        value: 0.0,
        grad: vec![-2.0, 0.0],
        hess: vec![0.0; 4],
    });
    let z = zero_2d();
    let r = homogenized_tensor_2d(&Coefficient::constant(2, 1.0), [&bad, &z], 1.0, 16);
    assert!(matches!(r, Err(Error::DegenerateModel(_))));
    assert!(HomogenizedModel::tensor([[1.0, 2.0], [2.0, 1.0]], Provenance::Neural).is_err());
}

fn dr_cell_stub(shift: f64) -> AnalyticSurrogate<impl Fn(&[f64]) -> EvalBundle> {
    AnalyticSurrogate::new(1, move |y: &[f64]| EvalBundle {
        value: -y[0].cos() / 2.0 + shift,
        grad: vec![y[0].sin() / 2.0],
        hess: vec![y[0].cos() / 2.0],
    })
}

#[test]
fn dr_reaction_coefficient() {
    let r = Coefficient::new(1, |y| y[0].cos());
    let analytic = homogenized_reaction(&r, &dr_cell_stub(0.0), 2.0 * PI, 64).unwrap();
    assert!((analytic + 0.25).abs() < 1e-12);
    let cell = CellProblem::dr(r.clone(), 2.0, 2.0 * PI).unwrap();
    let n = reference_cell_solution(&cell, 256).unwrap();
    let rs = homogenized_reaction_reference(&r, &n).unwrap();
    assert!((rs + 0.25).abs() < 1e-3, "r* = {rs}");
    let zero = AnalyticSurrogate::new(1, |_: &[f64]| EvalBundle {
        value: 0.0,
        grad: vec![0.0],
        hess: vec![0.0],
    });
    assert_eq!(homogenized_reaction(&r, &zero, 2.0 * PI, 64).unwrap(), 0.0);
}

fn slow() -> SlowCoefficient {
    SlowCoefficient {
        value: Arc::new(|x: f64, y: f64| 0.5 * (2.0 * PI * y).sin() + x.sin() + 2.0),
        dy: Arc::new(|_: f64, y: f64| PI * (2.0 * PI * y).cos()),
        period: 1.0,
    }
}

#[test]
fn slow_field_exact_mode() {
    let f = homogenized_field_1d_slow(&slow(), &[0.0, PI / 2.0], FieldMode::Exact { quadrature: 256 }).unwrap();
    assert!((f.values[0] - 3.75f64.sqrt()).abs() < 1e-10);
    assert!((f.values[1] - 8.75f64.sqrt()).abs() < 1e-10);
    let m = HomogenizedModel::field(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 1.5], Provenance::Exact).unwrap();
    let c = m.field_coefficient().unwrap();
    assert!((c.eval(&[1.0]) - 2.0).abs() < 1e-15);
    assert!(HomogenizedModel::field(vec![0.0, 1.0, 2.0], vec![1.0, -2.0, 1.5], Provenance::Exact).is_err());
}

fn cell_config(dims: Vec<usize>, epochs: usize, grid: usize, n_o: usize, eval: usize) -> CellSolveConfig {
    let mut train = TrainConfig::new(dims, epochs, 1e-3, LossWeights::new(0.5, 0.25, 0.25).unwrap(), 11);
    train.window = 100;
    CellSolveConfig {
        train,
        grid,
        oversampling: n_o,
        mean_penalty: 0.1,
        eval_grid: eval,
        reference_grid: 8 * eval,
    }
}

#[test]
fn neural_1d_cell_recovers_harmonic_mean() {
    let a = slow().at(0.0);
    let cell = CellProblem::elliptic_1d(a.clone(), 1.0).unwrap();
    let cfg = cell_config(vec![1, 32, 32, 1], 1500, 101, 2, 100);
    let sol = solve_cell(&cell, &cfg, None, &mut |_, _, _| {}).unwrap();
    assert_eq!(sol.model.errors.len(), 1500);
    let astar = homogenized_scalar_1d(&a, &sol.model.params, 1.0, 256).unwrap();
    let exact = harmonic_average(|y| 0.5 * (2.0 * PI * y).sin() + 2.0, 1.0, 256).unwrap();
    assert!(sol.model.windowed_error < 0.1, "cell error {}", sol.model.windowed_error);
    assert!((astar - exact).abs() / exact < 0.02, "a* {astar} vs {exact}");
}

#[test]
fn constant_2d_cell_stays_flat() {
    let cell = CellProblem::elliptic_2d(Coefficient::constant(2, 2.0), 0, 1.0).unwrap();
    let cfg = cell_config(vec![2, 16, 16, 1], 3000, 11, 2, 16);
    let sol = solve_cell(&cell, &cfg, None, &mut |_, _, _| {}).unwrap();
    // Absolute (RMS) error of the centred output against χ ≡ 0.
    assert!(sol.model.windowed_error < 1e-2, "{}", sol.model.windowed_error);
    let last = sol.model.losses.last().unwrap();
    // Root-mean-square residual relative to the coefficient scale.
    assert!(last.residual.sqrt() / 2.0 < 1e-3, "{last:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogenized_coefficients_ignore_constant_shifts(c in -50.0f64..50.0) {
        let r = Coefficient::new(1, |y| y[0].cos());
        let base = homogenized_reaction(&r, &dr_cell_stub(0.0), 2.0 * PI, 64).unwrap();
        let shifted = homogenized_reaction(&r, &dr_cell_stub(c), 2.0 * PI, 64).unwrap();
        prop_assert!((base - shifted).abs() < 1e-12 * (1.0 + c.abs()));

        // Correctors sin(2πy_1)/(4π) + c and c on the checkerboard cell.
        let chi = |s: f64| AnalyticSurrogate::new(2, move |y: &[f64]| EvalBundle {
            value: (2.0 * PI * y[0]).sin() / (4.0 * PI) + s,
            grad: vec![(2.0 * PI * y[0]).cos() / 2.0, 0.0],
            hess: vec![0.0; 4],
        });
        let z = zero_2d();
        let (a0, a1) = (chi(0.0), chi(c));
        let t0 = homogenized_tensor_2d(&checkerboard_cell(), [&a0, &z], 1.0, 32).unwrap();
        let t1 = homogenized_tensor_2d(&checkerboard_cell(), [&a1, &z], 1.0, 32).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((t0[i][j] - t1[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_tensors_are_spd(amp in 0.0f64..1.8, k in 1u32..3) {
        let kf = k as f64;
        let a = Coefficient::with_gradient(
            2,
            move |y| 2.0 + amp * (2.0 * PI * kf * y[0]).sin() * (2.0 * PI * y[1]).cos(),
            move |y, g| {
                g[0] = amp * 2.0 * PI * kf * (2.0 * PI * kf * y[0]).cos() * (2.0 * PI * y[1]).cos();
                g[1] = -amp * 2.0 * PI * (2.0 * PI * kf * y[0]).sin() * (2.0 * PI * y[1]).sin();
            },
        );
        let t = reference_tensor(&a, 24);
        prop_assert!(eigenvalues(&t)[0] > 0.0);
        prop_assert!((t[0][1] - t[1][0]).abs() < 1e-14);
    }
}
