//! Problem definition and time bookkeeping: the semilinear SDDE itself,
//! delay-aligned uniform meshes, Bellman breakpoints, and trajectory storage
//! with history lookup.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use std::sync::Arc;

/// Drift / diffusion callback: `(t, x, x_delayed) -> vector`, where
/// `x_delayed[k]` is the state lagged by the k-th delay.
pub type StateFn = Arc<dyn Fn(f64, &Vector, &[Vector]) -> Vector + Send + Sync>;
/// Jacobian callback with the same arguments, returning a d x d matrix.
pub type JacobianFn = Arc<dyn Fn(f64, &Vector, &[Vector]) -> Matrix + Send + Sync>;
/// History callback on `[-tau, 0]`.
pub type HistoryFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

/// Relative tolerance for "x is an integer multiple of h" checks. Binary step
/// sizes are exact; decimal delays need the slack.
const DIV_TOL: f64 = 1e-12;

fn ratio_as_integer(x: f64, unit: f64) -> Option<i64> {
    let r = x / unit;
    let k = r.round();
    if (r - k).abs() <= DIV_TOL * r.abs().max(1.0) {
        Some(k as i64)
    } else {
        None
    }
}

/// dX = [A_0 X + f(t, X, X_τ...)] dt + Σ_j [A_j X + g_j(t, X, X_τ...)] dW_j
/// on [0, T], with X = φ on [-τ, 0].
#[derive(Clone)]
pub struct Sdde {
    dim: usize,
    noise_dim: usize,
    matrices: Vec<Matrix>,
    delays: Vec<f64>,
    horizon: f64,
    drift: StateFn,
    diffusion: Vec<StateFn>,
    jac_state: Option<Vec<JacobianFn>>,
    jac_delay: Option<Vec<Vec<JacobianFn>>>,
    history: HistoryFn,
}

pub struct SddeBuilder {
    dim: usize,
    noise_dim: usize,
    matrices: Option<Vec<Matrix>>,
    delays: Vec<f64>,
    horizon: f64,
    drift: Option<StateFn>,
    diffusion: Option<Vec<StateFn>>,
    jac_state: Option<Vec<JacobianFn>>,
    jac_delay: Option<Vec<Vec<JacobianFn>>>,
    history: Option<HistoryFn>,
}

impl Sdde {
    pub fn builder(dim: usize, noise_dim: usize) -> SddeBuilder {
        SddeBuilder {
            dim,
            noise_dim,
            matrices: None,
            delays: Vec::new(),
            horizon: 1.0,
            drift: None,
            diffusion: None,
            jac_state: None,
            jac_delay: None,
            history: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// A_0..A_m.
    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, j: usize) -> &Matrix {
        &self.matrices[j]
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn delay_count(&self) -> usize {
        self.delays.len()
    }

    pub fn max_delay(&self) -> f64 {
        self.delays.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_delay(&self) -> Option<f64> {
        self.delays.iter().cloned().reduce(f64::min)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn history(&self, t: f64) -> Vector {
        (self.history)(t)
    }

    pub fn drift(&self, t: f64, x: &Vector, xd: &[Vector]) -> Vector {
        (self.drift)(t, x, xd)
    }

    pub fn diffusion(&self, j: usize, t: f64, x: &Vector, xd: &[Vector]) -> Vector {
        (self.diffusion[j])(t, x, xd)
    }

    pub fn has_jacobians(&self) -> bool {
        self.jac_state.is_some() && (self.delays.is_empty() || self.jac_delay.is_some())
    }

    /// ∇_x g_j.
    pub fn jacobian_state(&self, j: usize, t: f64, x: &Vector, xd: &[Vector]) -> Result<Matrix> {
        let jac = self.jac_state.as_ref().ok_or_else(|| {
            Error::Configuration("state Jacobians required but not provided".into())
        })?;
        Ok((jac[j])(t, x, xd))
    }

    /// ∇_{x_{τ_k}} g_j.
    pub fn jacobian_delay(
        &self,
        j: usize,
        k: usize,
        t: f64,
        x: &Vector,
        xd: &[Vector],
    ) -> Result<Matrix> {
        let jac = self.jac_delay.as_ref().ok_or_else(|| {
            Error::Configuration("delay Jacobians required but not provided".into())
        })?;
        Ok((jac[j][k])(t, x, xd))
    }

    /// Modified drift f̃ = f - Σ_j A_j g_j.
    pub fn f_tilde(&self, t: f64, x: &Vector, xd: &[Vector]) -> Vector {
        let mut out = self.drift(t, x, xd);
        for j in 0..self.noise_dim {
            out -= &self.matrices[j + 1] * self.diffusion(j, t, x, xd);
        }
        out
    }

    /// Equivalent problem with all A matrices zero and the linear parts folded
    /// into the callbacks, so the plain Taylor schemes integrate the full
    /// equation. Folded Jacobians are A_j + ∇_x g_j when available.
    pub fn as_plain(&self) -> Sdde {
        let dim = self.dim;
        let m = self.noise_dim;
        let a0 = self.matrices[0].clone();
        let orig_drift = self.drift.clone();
        let drift: StateFn = Arc::new(move |t, x, xd| &a0 * x + orig_drift(t, x, xd));

        let diffusion = (0..m)
            .map(|j| {
                let aj = self.matrices[j + 1].clone();
                let g = self.diffusion[j].clone();
                let folded: StateFn = Arc::new(move |t, x, xd| &aj * x + g(t, x, xd));
                folded
            })
            .collect();

        let jac_state = self.jac_state.as_ref().map(|jacs| {
            (0..m)
                .map(|j| {
                    let aj = self.matrices[j + 1].clone();
                    let jac = jacs[j].clone();
                    let folded: JacobianFn = Arc::new(move |t, x, xd| &aj + jac(t, x, xd));
                    folded
                })
                .collect()
        });

        Sdde {
            dim,
            noise_dim: m,
            matrices: (0..=m).map(|_| Matrix::zeros(dim, dim)).collect(),
            delays: self.delays.clone(),
            horizon: self.horizon,
            drift,
            diffusion,
            jac_state,
            jac_delay: self.jac_delay.clone(),
            history: self.history.clone(),
        }
    }

    /// Same problem with the A matrices replaced (callbacks untouched).
    pub fn with_matrices(mut self, matrices: Vec<Matrix>) -> Result<Sdde> {
        if matrices.len() != self.noise_dim + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} matrices, got {}",
                self.noise_dim + 1,
                matrices.len()
            )));
        }
        for (j, a) in matrices.iter().enumerate() {
            if a.nrows() != self.dim || a.ncols() != self.dim {
                return Err(Error::InvalidArgument(format!(
                    "A_{j} is {}x{}, expected {}x{}",
                    a.nrows(),
                    a.ncols(),
                    self.dim,
                    self.dim
                )));
            }
        }
        self.matrices = matrices;
        Ok(self)
    }

    /// Replace missing Jacobians with central finite differences of the
    /// diffusion callbacks, step 1e-6 (1 + |x_i|) per component. Explicit
    /// opt-in; analytic Jacobians win when present.
    pub fn with_fd_jacobians(mut self) -> Sdde {
        let m = self.noise_dim;
        let kd = self.delays.len();
        if self.jac_state.is_none() {
            self.jac_state = Some(
                (0..m)
                    .map(|j| {
                        let g = self.diffusion[j].clone();
                        let jac: JacobianFn = Arc::new(move |t, x, xd| {
                            fd_jacobian(|y| g(t, y, xd), x)
                        });
                        jac
                    })
                    .collect(),
            );
        }
        if self.jac_delay.is_none() && kd > 0 {
            self.jac_delay = Some(
                (0..m)
                    .map(|j| {
                        (0..kd)
                            .map(|k| {
                                let g = self.diffusion[j].clone();
                                let jac: JacobianFn = Arc::new(move |t, x, xd| {
                                    fd_jacobian(
                                        |y| {
                                            let mut xd2 = xd.to_vec();
                                            xd2[k] = y.clone();
                                            g(t, x, &xd2)
                                        },
                                        &xd[k],
                                    )
                                });
                                jac
                            })
                            .collect()
                    })
                    .collect(),
            );
        }
        self
    }
}

fn fd_jacobian(g: impl Fn(&Vector) -> Vector, at: &Vector) -> Matrix {
    let d = at.len();
    let mut jac = Matrix::zeros(d, d);
    for i in 0..d {
        let step = 1e-6 * (1.0 + at[i].abs());
        let mut hi = at.clone();
        let mut lo = at.clone();
        hi[i] += step;
        lo[i] -= step;
        let col = (g(&hi) - g(&lo)) / (2.0 * step);
        jac.set_column(i, &col);
    }
    jac
}

impl SddeBuilder {
    /// A_0..A_m in order; must be `noise_dim + 1` square matrices.
    pub fn matrices(mut self, matrices: Vec<Matrix>) -> Self {
        self.matrices = Some(matrices);
        self
    }

    pub fn delays(mut self, delays: Vec<f64>) -> Self {
        self.delays = delays;
        self
    }

    pub fn horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn drift(mut self, f: StateFn) -> Self {
        self.drift = Some(f);
        self
    }

    pub fn diffusion(mut self, g: Vec<StateFn>) -> Self {
        self.diffusion = Some(g);
        self
    }

    pub fn state_jacobians(mut self, jac: Vec<JacobianFn>) -> Self {
        self.jac_state = Some(jac);
        self
    }

    /// `jac[j][k]` = ∇ of g_j with respect to the k-th delayed argument.
    pub fn delay_jacobians(mut self, jac: Vec<Vec<JacobianFn>>) -> Self {
        self.jac_delay = Some(jac);
        self
    }

    pub fn history(mut self, phi: HistoryFn) -> Self {
        self.history = Some(phi);
        self
    }

    pub fn build(self) -> Result<Sdde> {
        let dim = self.dim;
        let m = self.noise_dim;
        if dim == 0 {
            return Err(Error::InvalidArgument("state dimension must be >= 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        for &tau in &self.delays {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "delays must be positive, got {tau}"
                )));
            }
        }
        let zero_state: StateFn = Arc::new(move |_, _, _| Vector::zeros(dim));
        let matrices = self
            .matrices
            .unwrap_or_else(|| (0..=m).map(|_| Matrix::zeros(dim, dim)).collect());
        if matrices.len() != m + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} matrices A_0..A_{m}, got {}",
                m + 1,
                matrices.len()
            )));
        }
        for (j, a) in matrices.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::InvalidArgument(format!(
                    "A_{j} is {}x{}, expected {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        let drift = self.drift.unwrap_or_else(|| zero_state.clone());
        let diffusion = self
            .diffusion
            .unwrap_or_else(|| (0..m).map(|_| zero_state.clone()).collect());
        if diffusion.len() != m {
            return Err(Error::InvalidArgument(format!(
                "expected {m} diffusion callbacks, got {}",
                diffusion.len()
            )));
        }
        let history = self
            .history
            .ok_or_else(|| Error::InvalidArgument("history callback is required".into()))?;

        let problem = Sdde {
            dim,
            noise_dim: m,
            matrices,
            delays: self.delays,
            horizon: self.horizon,
            drift,
            diffusion,
            jac_state: self.jac_state,
            jac_delay: self.jac_delay,
            history,
        };

        // Spot-check: callbacks must return finite vectors of the right size
        // at the initial data.
        let x0 = problem.history(0.0);
        if x0.len() != dim || !x0.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "history(0) is not a finite vector of the problem dimension".into(),
            ));
        }
        let xd: Vec<Vector> = problem.delays.iter().map(|&tau| problem.history(-tau)).collect();
        let f0 = problem.drift(0.0, &x0, &xd);
        if f0.len() != dim || !f0.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "drift does not return a finite vector of the problem dimension".into(),
            ));
        }
        for j in 0..m {
            let gj = problem.diffusion(j, 0.0, &x0, &xd);
            if gj.len() != dim || !gj.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "diffusion g_{} does not return a finite vector of the problem dimension",
                    j + 1
                )));
            }
        }
        Ok(problem)
    }
}

// ---------------------------------------------------------------------------

/// Uniform mesh t_n = n h for n = -p..=N, covering [-tau, T] with every delay
/// on a mesh point.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    h: f64,
    history_steps: usize,
    steps: usize,
    delay_steps: Vec<usize>,
}

pub fn build_mesh(horizon: f64, h: f64, delays: &[f64]) -> Result<TimeMesh> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step size {h} must be > 0")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be > 0"
        )));
    }
    let steps = ratio_as_integer(horizon, h).filter(|&n| n >= 1).ok_or_else(|| {
        Error::MeshAlignment(format!(
            "horizon {horizon} is not an integer multiple of h = {h}"
        ))
    })? as usize;
    let mut delay_steps = Vec::with_capacity(delays.len());
    for &tau in delays {
        let p = ratio_as_integer(tau, h).filter(|&n| n >= 1).ok_or_else(|| {
            Error::MeshAlignment(format!("delay {tau} is not an integer multiple of h = {h}"))
        })? as usize;
        delay_steps.push(p);
    }
    let history_steps = delay_steps.iter().cloned().max().unwrap_or(0);
    Ok(TimeMesh {
        h,
        history_steps,
        steps,
        delay_steps,
    })
}

impl TimeMesh {
    pub fn h(&self) -> f64 {
        self.h
    }

    /// N: number of forward steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// p: mesh points below zero.
    pub fn history_steps(&self) -> usize {
        self.history_steps
    }

    /// p_k with t_{p_k} = τ_k.
    pub fn delay_steps(&self) -> &[usize] {
        &self.delay_steps
    }

    pub fn time(&self, n: i64) -> f64 {
        n as f64 * self.h
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps as i64)
    }

    pub fn index_of(&self, t: f64) -> Result<i64> {
        let r = t / self.h;
        let k = r.round();
        if (r - k).abs() > 1e-9 * r.abs().max(1.0) {
            return Err(Error::Lookup(format!(
                "time {t} is not on the mesh (h = {})",
                self.h
            )));
        }
        let k = k as i64;
        if k < -(self.history_steps as i64) || k > self.steps as i64 {
            return Err(Error::Lookup(format!(
                "time {t} outside the mesh range [{}, {}]",
                -(self.history_steps as f64) * self.h,
                self.horizon()
            )));
        }
        Ok(k)
    }
}

// ---------------------------------------------------------------------------

/// Sorted multiples of the delays in (0, T], merged, with T always last.
#[derive(Debug, Clone, PartialEq)]
pub struct BellmanBreakpoints {
    times: Vec<f64>,
}

pub fn bellman_intervals(delays: &[f64], horizon: f64) -> Result<BellmanBreakpoints> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be > 0"
        )));
    }
    let tol = 1e-12 * horizon.max(1.0);
    let mut times = Vec::new();
    for &tau in delays {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delays must be positive, got {tau}"
            )));
        }
        let mut n = 1u64;
        loop {
            let t = n as f64 * tau;
            if t > horizon + tol {
                break;
            }
            times.push(if (t - horizon).abs() <= tol { horizon } else { t });
            n += 1;
        }
    }
    times.push(horizon);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(BellmanBreakpoints { times })
}

impl BellmanBreakpoints {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn count(&self) -> usize {
        self.times.len()
    }
}

// ---------------------------------------------------------------------------

/// Scheme output on the mesh, including the history segment.
#[derive(Debug, Clone)]
pub struct Trajectory {
    mesh: TimeMesh,
    /// values[0] is Y at n = -p.
    values: Vec<Vector>,
    diverged_at: Option<usize>,
}

impl Trajectory {
    /// Storage with the history segment n = -p..=0 filled from φ.
    pub fn with_history(mesh: TimeMesh, problem: &Sdde) -> Self {
        let p = mesh.history_steps();
        let mut values = Vec::with_capacity(p + mesh.steps() + 1);
        for n in -(p as i64)..=0 {
            values.push(problem.history(mesh.time(n)));
        }
        Self {
            mesh,
            values,
            diverged_at: None,
        }
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub(crate) fn push(&mut self, v: Vector) {
        self.values.push(v);
    }

    pub(crate) fn mark_diverged(&mut self, step: usize) {
        self.diverged_at = Some(step);
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    /// Highest forward step index with a stored value (p + 1 values precede
    /// step 1).
    pub fn last_step(&self) -> i64 {
        self.values.len() as i64 - 1 - self.mesh.history_steps() as i64
    }

    pub fn value_at_step(&self, n: i64) -> Result<&Vector> {
        let p = self.mesh.history_steps() as i64;
        if n < -p || n > self.last_step() {
            return Err(Error::Lookup(format!(
                "step {n} outside stored range [{}, {}]",
                -p,
                self.last_step()
            )));
        }
        Ok(&self.values[(n + p) as usize])
    }

    /// Value at a mesh time, with history values coming from the stored φ
    /// samples for t <= 0.
    pub fn lookup(&self, t: f64) -> Result<&Vector> {
        let n = self.mesh.index_of(t)?;
        self.value_at_step(n)
    }

    /// Final value Y_N; `None` when the run diverged before T.
    pub fn final_value(&self) -> Option<&Vector> {
        if self.diverged() || self.last_step() < self.mesh.steps() as i64 {
            None
        } else {
            self.value_at_step(self.mesh.steps() as i64).ok()
        }
    }

    /// (t_n, Y_n) pairs over the stored range.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &Vector)> {
        let p = self.mesh.history_steps() as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.mesh.time(i as i64 - p), v))
    }

    /// Largest |Y| component seen over the stored range.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }
}
