//! Delayed-cooling stochastic heat equation, assembled into the linear SDDE
//! form by forward-time centered-space discretization plus a truncated
//! Karhunen-Loeve expansion of the Q-Wiener forcing.
//!
//! State components are U_1..U_d (the cross sections at x_j = j Δx); U_0 is
//! eliminated and U_d is carried with zero dynamics so the matrix indexing
//! matches the discretization.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::{JacobianFn, Sdde, StateFn};
use crate::noise::{sheet_min_eigenfunction, sheet_min_eigenvalue, KlKind};
use crate::model::Trajectory;
use std::sync::Arc;

pub type TemperatureFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct HeatProblem {
    /// Spatial interval count d; Δx = 1/d.
    pub intervals: usize,
    /// Diffusion coefficient D.
    pub diffusion: f64,
    /// Noise scale c (0 switches the noise off).
    pub noise_scale: f64,
    /// Cooling delay τ (0 = instantaneous cooling).
    pub delay: f64,
    /// Cooling rates r_a, r_b at the observation points a = x_1, b = x_{d-1}.
    pub rate_a: f64,
    pub rate_b: f64,
    /// Initial temperature on [0, 1].
    pub initial: TemperatureFn,
    pub noise_kind: KlKind,
    pub horizon: f64,
}

impl HeatProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        intervals: usize,
        diffusion: f64,
        noise_scale: f64,
        delay: f64,
        rate_a: f64,
        rate_b: f64,
        noise_kind: KlKind,
        horizon: f64,
        initial: TemperatureFn,
    ) -> Result<Self> {
        if intervals < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 spatial intervals, got {intervals}"
            )));
        }
        if !(diffusion.is_finite() && diffusion > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion coefficient must be positive, got {diffusion}"
            )));
        }
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delay must be nonnegative, got {delay}"
            )));
        }
        if !(rate_a >= 0.0 && rate_b >= 0.0 && noise_scale >= 0.0) {
            return Err(Error::InvalidArgument(
                "cooling rates and noise scale must be nonnegative".into(),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            intervals,
            diffusion,
            noise_scale,
            delay,
            rate_a,
            rate_b,
            initial,
            noise_kind,
            horizon,
        })
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    /// Observation points a = x_1 and b = x_{d-1}.
    pub fn observation_points(&self) -> (f64, f64) {
        (self.dx(), (self.intervals - 1) as f64 * self.dx())
    }
}

/// Largest explicit-Euler-stable step: h_max = (Δx)^2 / (2D). Candidate
/// steps must stay strictly below it.
pub fn stability_threshold(hp: &HeatProblem) -> f64 {
    let dx = hp.dx();
    dx * dx / (2.0 * hp.diffusion)
}

/// Linear-blend cooling term from the two delayed observations; zero outside
/// the open interval (0, 1).
pub fn cooling(hp: &HeatProblem, u_a: f64, u_b: f64, x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (a, b) = hp.observation_points();
    ((x - b) / (b - a)) * hp.rate_a * u_a + ((a - x) / (b - a)) * hp.rate_b * u_b
}

/// Assemble the FTCS + KL system as a semilinear SDDE with `modes` noise
/// terms: A_0 the scaled tridiagonal Laplacian with a zero final row, drift
/// the delayed cooling (linear in two delayed components), and diagonal
/// noise matrices carrying c/sqrt(Δx) exactly once.
pub fn assemble(hp: &HeatProblem, modes: usize) -> Result<Sdde> {
    let d = hp.intervals;
    if modes == 0 || modes > d {
        return Err(Error::Configuration(format!(
            "mode count must be in 1..={d}, got {modes}"
        )));
    }
    let dx = hp.dx();
    let scale = hp.diffusion / (dx * dx);

    let mut a0 = Matrix::zeros(d, d);
    for i in 0..d - 1 {
        a0[(i, i)] = -2.0 * scale;
        if i > 0 {
            a0[(i, i - 1)] = scale;
        }
        a0[(i, i + 1)] = scale;
    }

    let amp = hp.noise_scale / dx.sqrt();
    let mut matrices = Vec::with_capacity(modes + 1);
    matrices.push(a0);
    for j in 1..=modes {
        let mut aj = Matrix::zeros(d, d);
        if hp.noise_scale > 0.0 {
            match hp.noise_kind {
                KlKind::Uncorrelated => {
                    aj[(j - 1, j - 1)] = amp;
                }
                KlKind::BrownianSheetMin => {
                    let lam = sheet_min_eigenvalue(j).sqrt();
                    for i in 0..d {
                        let x = (i + 1) as f64 * dx;
                        aj[(i, i)] = amp * lam * sheet_min_eigenfunction(j, x);
                    }
                }
            }
        }
        matrices.push(aj);
    }

    // Drift vectors: (v_1^j, v_2^j) = (j + 1 - d, 1 - j) for j = 1..d-1, zero
    // in the pinned row.
    let rv_a = hp.rate_a / (d - 2) as f64;
    let rv_b = hp.rate_b / (d - 2) as f64;
    let mut v1 = Vector::zeros(d);
    let mut v2 = Vector::zeros(d);
    for i in 0..d - 1 {
        let j = (i + 1) as f64;
        v1[i] = rv_a * (j + 1.0 - d as f64);
        v2[i] = rv_b * (1.0 - j);
    }

    let delayed = hp.delay > 0.0;
    let drift: StateFn = Arc::new(move |_, x, xd| {
        let state = if delayed { &xd[0] } else { x };
        &v1 * state[0] + &v2 * state[d - 2]
    });

    let zero_state: StateFn = Arc::new(move |_, _, _| Vector::zeros(d));
    let zero_jac: JacobianFn = Arc::new(move |_, _, _| Matrix::zeros(d, d));
    let initial = hp.initial.clone();
    let history = Arc::new(move |_t: f64| {
        Vector::from_fn(d, |i, _| initial((i + 1) as f64 * dx))
    });

    let mut builder = Sdde::builder(d, modes)
        .matrices(matrices)
        .horizon(hp.horizon)
        .drift(drift)
        .diffusion((0..modes).map(|_| zero_state.clone()).collect())
        .state_jacobians((0..modes).map(|_| zero_jac.clone()).collect())
        .history(history);
    if delayed {
        builder = builder
            .delays(vec![hp.delay])
            .delay_jacobians((0..modes).map(|_| vec![zero_jac.clone()]).collect());
    }
    builder.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    /// Fixed time, values across the spatial grid.
    TimeFixed,
    /// Fixed position, values across the time mesh (t >= 0).
    SpaceFixed,
}

#[derive(Debug, Clone)]
pub struct FieldSlice {
    pub axis: SliceAxis,
    pub coordinate: f64,
    /// Space coordinates (TimeFixed) or times (SpaceFixed).
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

/// Extract a cross section of the simulated field, with the boundary values
/// U_0 = U_d = 0 re-attached for plotting.
pub fn slice(
    traj: &Trajectory,
    hp: &HeatProblem,
    axis: SliceAxis,
    coordinate: f64,
) -> Result<FieldSlice> {
    let d = hp.intervals;
    let dx = hp.dx();
    match axis {
        SliceAxis::TimeFixed => {
            let state = traj.lookup(coordinate)?;
            let mut positions = Vec::with_capacity(d + 1);
            let mut values = Vec::with_capacity(d + 1);
            positions.push(0.0);
            values.push(0.0);
            for j in 1..d {
                positions.push(j as f64 * dx);
                values.push(state[j - 1]);
            }
            positions.push(1.0);
            values.push(0.0);
            Ok(FieldSlice {
                axis,
                coordinate,
                positions,
                values,
            })
        }
        SliceAxis::SpaceFixed => {
            let r = coordinate / dx;
            let j = r.round();
            if (r - j).abs() > 1e-9 * r.abs().max(1.0) || j < 0.0 || j > d as f64 {
                return Err(Error::Lookup(format!(
                    "position {coordinate} is not a grid point (Δx = {dx})"
                )));
            }
            let j = j as usize;
            let mut positions = Vec::new();
            let mut values = Vec::new();
            for n in 0..=traj.last_step().max(0) {
                let t = traj.mesh().time(n);
                positions.push(t);
                values.push(if j == 0 || j == d {
                    0.0
                } else {
                    traj.value_at_step(n)?[j - 1]
                });
            }
            Ok(FieldSlice {
                axis,
                coordinate,
                positions,
                values,
            })
        }
    }
}
