//! Named problem presets for the CLI and the experiment harness.
//!
//! `example1`..`example3` are two-dimensional test problems of increasing
//! generality (linear delay-only, semilinear, two delays), `gbm` is the
//! scalar geometric Brownian motion with its closed-form solution, and
//! `spdde-heat` is the delayed-cooling heat equation at its reference
//! parameters.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::{HistoryFn, JacobianFn, Sdde, StateFn};
use crate::noise::KlKind;
use crate::spdde::{assemble, HeatProblem};
use std::sync::Arc;

pub const NAMES: [&str; 5] = ["example1", "example2", "example3", "gbm", "spdde-heat"];

pub fn by_name(name: &str) -> Result<Sdde> {
    match name.trim().to_ascii_lowercase().as_str() {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "example3" => Ok(example3()),
        "gbm" => Ok(gbm(0.05, 0.2, 1.0, 1.0)),
        "spdde-heat" => assemble(&heat_default(), 50),
        other => Err(Error::UnknownPreset(other.into())),
    }
}

fn constant_history(v: Vec<f64>) -> HistoryFn {
    Arc::new(move |_| Vector::from_vec(v.clone()))
}

/// Scalar dX = a X dt + b X dW with constant initial value; exact solution
/// X(t) = exp((a - b^2/2) t + b W(t)) X_0.
pub fn gbm(a: f64, b: f64, x0: f64, horizon: f64) -> Sdde {
    Sdde::builder(1, 1)
        .matrices(vec![
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, b),
        ])
        .horizon(horizon)
        .state_jacobians(vec![Arc::new(|_, _, _| Matrix::zeros(1, 1))])
        .history(constant_history(vec![x0]))
        .build()
        .expect("gbm preset is well-formed")
}

/// Reference parameters of the heat-equation example: d = 50, τ = 1,
/// r_a = 1, r_b = 10, c = 0.15, D = 1/25, T_0(x) = sin(2πx).
pub fn heat_default() -> HeatProblem {
    HeatProblem::new(
        50,
        1.0 / 25.0,
        0.15,
        1.0,
        1.0,
        10.0,
        KlKind::BrownianSheetMin,
        6.0,
        Arc::new(|x: f64| (std::f64::consts::TAU * x).sin()),
    )
    .expect("heat preset is well-formed")
}

/// Linear-in-state problem, one delay: d = 2, m = 2, τ = 1, T = 6,
/// φ ≡ (0.8, 0.2), diffusion functions of the delayed state only.
pub fn example1() -> Sdde {
    let a0 = Matrix::from_row_slice(2, 2, &[-0.1, 0.4, -0.3, 0.2]);
    let a1 = Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]);
    let a2 = Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.3, 0.1]);

    let f: StateFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        Vector::from_vec(vec![
            0.1 * (y[0] + y[1]).cos(),
            0.1 * (y[1] - y[0] * y[0]),
        ])
    });
    let g1: StateFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        Vector::from_vec(vec![
            (y[0].sin() + (-y[1] * y[1]).exp()) / 3.0,
            (y[0].atan() + y[1].cos()) / 3.0,
        ])
    });
    let g2: StateFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        Vector::from_vec(vec![
            0.18 * y[0] + 0.04 * y[1].atan(),
            0.21 * y[0] + 0.03 * y[1].atan(),
        ])
    });

    let zero_jac: JacobianFn = Arc::new(|_, _, _| Matrix::zeros(2, 2));
    let j1d: JacobianFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        Matrix::from_row_slice(
            2,
            2,
            &[
                y[0].cos() / 3.0,
                -2.0 * y[1] * (-y[1] * y[1]).exp() / 3.0,
                1.0 / (1.0 + y[0] * y[0]) / 3.0,
                -y[1].sin() / 3.0,
            ],
        )
    });
    let j2d: JacobianFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        Matrix::from_row_slice(
            2,
            2,
            &[0.18, 0.04 / (1.0 + y[1] * y[1]), 0.21, 0.03 / (1.0 + y[1] * y[1])],
        )
    });

    Sdde::builder(2, 2)
        .matrices(vec![a0, a1, a2])
        .delays(vec![1.0])
        .horizon(6.0)
        .drift(f)
        .diffusion(vec![g1, g2])
        .state_jacobians(vec![zero_jac.clone(), zero_jac])
        .delay_jacobians(vec![vec![j1d], vec![j2d]])
        .history(constant_history(vec![0.8, 0.2]))
        .build()
        .expect("example1 preset is well-formed")
}

/// Semilinear problem with the same matrices and delay as `example1` but
/// diffusion depending on both current and delayed state.
pub fn example2() -> Sdde {
    let a0 = Matrix::from_row_slice(2, 2, &[-0.1, 0.4, -0.3, 0.2]);
    let a1 = Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]);
    let a2 = Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.3, 0.1]);

    let f: StateFn = Arc::new(|_, x, xd| {
        let y = &xd[0];
        let s = x[0] + x[1] + y[0] + y[1];
        Vector::from_vec(vec![s.cos() / 3.0, s.sin() / 3.0])
    });
    let g1: StateFn = Arc::new(|_, x, xd| {
        let y = &xd[0];
        Vector::from_vec(vec![
            x[0].cos() / 9.0 + (y[0].sin() + (-y[1] * y[1]).exp()) / 5.0,
            x[1].sin() / 9.0 + (y[0].atan() + y[1].cos()) / 5.0,
        ])
    });
    let g2: StateFn = Arc::new(|_, x, xd| {
        let y = &xd[0];
        let w = 1.0 / (1.0 + y[0] * y[0]);
        Vector::from_vec(vec![
            x[1].sin() / 7.0 + 0.04 * w + 0.05 * y[1].atan(),
            x[0].cos() / 7.0 + 0.06 * w + 0.04 * y[1].atan(),
        ])
    });

    let j1x: JacobianFn = Arc::new(|_, x, _| {
        Matrix::from_row_slice(2, 2, &[-x[0].sin() / 9.0, 0.0, 0.0, x[1].cos() / 9.0])
    });
    let j2x: JacobianFn = Arc::new(|_, x, _| {
        Matrix::from_row_slice(2, 2, &[0.0, x[1].cos() / 7.0, -x[0].sin() / 7.0, 0.0])
    });
    let j1d: JacobianFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        Matrix::from_row_slice(
            2,
            2,
            &[
                y[0].cos() / 5.0,
                -2.0 * y[1] * (-y[1] * y[1]).exp() / 5.0,
                1.0 / (1.0 + y[0] * y[0]) / 5.0,
                -y[1].sin() / 5.0,
            ],
        )
    });
    let j2d: JacobianFn = Arc::new(|_, _, xd| {
        let y = &xd[0];
        let dw = -2.0 * y[0] / (1.0 + y[0] * y[0]).powi(2);
        Matrix::from_row_slice(
            2,
            2,
            &[
                0.04 * dw,
                0.05 / (1.0 + y[1] * y[1]),
                0.06 * dw,
                0.04 / (1.0 + y[1] * y[1]),
            ],
        )
    });

    Sdde::builder(2, 2)
        .matrices(vec![a0, a1, a2])
        .delays(vec![1.0])
        .horizon(6.0)
        .drift(f)
        .diffusion(vec![g1, g2])
        .state_jacobians(vec![j1x, j2x])
        .delay_jacobians(vec![vec![j1d], vec![j2d]])
        .history(constant_history(vec![0.8, 0.2]))
        .build()
        .expect("example2 preset is well-formed")
}

/// Two delays τ = (1, 1/4): d = 2, m = 2, T = 6, φ ≡ (0.8, 0.2).
pub fn example3() -> Sdde {
    let a0 = Matrix::from_row_slice(2, 2, &[-0.1, 0.03, -0.2, -0.04]);
    let a1 = Matrix::from_row_slice(2, 2, &[0.15, 0.1, 0.2, 0.1]);
    let a2 = Matrix::from_row_slice(2, 2, &[0.05, 0.03, 0.04, 0.01]);

    let f: StateFn = Arc::new(|_, x, _| {
        Vector::from_vec(vec![x[0].sin() / 5.0, x[1].cos() / 5.0])
    });
    let g1: StateFn = Arc::new(|_, _, xd| {
        let (y, z) = (&xd[0], &xd[1]);
        Vector::from_vec(vec![(z[0] - y[0]) / 10.0, (y[1] - z[1]) / 10.0])
    });
    let g2: StateFn = Arc::new(|_, x, xd| {
        let (y, z) = (&xd[0], &xd[1]);
        Vector::from_vec(vec![
            (x[1] * y[1] * z[1]).sin() / 5.0,
            (x[0] * y[0] * z[0]).cos() / 5.0,
        ])
    });

    let zero_jac: JacobianFn = Arc::new(|_, _, _| Matrix::zeros(2, 2));
    let j1d1: JacobianFn = Arc::new(|_, _, _| {
        Matrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.0, 0.1])
    });
    let j1d2: JacobianFn = Arc::new(|_, _, _| {
        Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, -0.1])
    });
    let j2x: JacobianFn = Arc::new(|_, x, xd| {
        let (y, z) = (&xd[0], &xd[1]);
        Matrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                y[1] * z[1] * (x[1] * y[1] * z[1]).cos() / 5.0,
                -y[0] * z[0] * (x[0] * y[0] * z[0]).sin() / 5.0,
                0.0,
            ],
        )
    });
    let j2d1: JacobianFn = Arc::new(|_, x, xd| {
        let (y, z) = (&xd[0], &xd[1]);
        Matrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                x[1] * z[1] * (x[1] * y[1] * z[1]).cos() / 5.0,
                -x[0] * z[0] * (x[0] * y[0] * z[0]).sin() / 5.0,
                0.0,
            ],
        )
    });
    let j2d2: JacobianFn = Arc::new(|_, x, xd| {
        let (y, z) = (&xd[0], &xd[1]);
        Matrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                x[1] * y[1] * (x[1] * y[1] * z[1]).cos() / 5.0,
                -x[0] * y[0] * (x[0] * y[0] * z[0]).sin() / 5.0,
                0.0,
            ],
        )
    });

    Sdde::builder(2, 2)
        .matrices(vec![a0, a1, a2])
        .delays(vec![1.0, 0.25])
        .horizon(6.0)
        .drift(f)
        .diffusion(vec![g1, g2])
        .state_jacobians(vec![zero_jac, j2x])
        .delay_jacobians(vec![vec![j1d1, j1d2], vec![j2d1, j2d2]])
        .history(constant_history(vec![0.8, 0.2]))
        .build()
        .expect("example3 preset is well-formed")
}
