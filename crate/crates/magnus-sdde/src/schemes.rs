//! One-step maps and the integration driver.
//!
//! Four schemes: explicit Euler-Maruyama and Milstein run on the folded plain
//! form of the problem (linear parts absorbed into the callbacks), while the
//! exponential MEM and MM schemes keep the linear part in a per-step matrix
//! logarithm and multiply the inner Taylor update by its exponential.

use crate::error::{Error, Result};
use crate::linalg::{lie_bracket, mat_exp, Matrix, Vector};
use crate::model::{Sdde, TimeMesh, Trajectory};
use crate::noise::{IntegralRule, StepNoise, WienerLattice};

/// Any |Y| component beyond this flags the trajectory as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Em,
    Milstein,
    Mem,
    Mm,
}

impl SchemeKind {
    pub fn needs_jacobians(&self) -> bool {
        matches!(self, SchemeKind::Milstein | SchemeKind::Mm)
    }

    /// Whether the scheme consumes double integrals (and therefore the
    /// `h <= min delay` condition applies).
    pub fn needs_doubles(&self) -> bool {
        matches!(self, SchemeKind::Milstein | SchemeKind::Mm)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Em => "em",
            SchemeKind::Milstein => "milstein",
            SchemeKind::Mem => "mem",
            SchemeKind::Mm => "mm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "em" => Ok(SchemeKind::Em),
            "milstein" => Ok(SchemeKind::Milstein),
            "mem" => Ok(SchemeKind::Mem),
            "mm" => Ok(SchemeKind::Mm),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// (A_0 - 1/2 Σ A_i^2) h + Σ_j A_j ΔW_j.
pub fn magnus_log_1(p: &Sdde, noise: &StepNoise) -> Matrix {
    magnus_log_1_with(&hat_a0(p), p, noise)
}

fn hat_a0(p: &Sdde) -> Matrix {
    let mut hat = p.matrix(0).clone();
    for j in 1..=p.noise_dim() {
        hat -= p.matrix(j) * p.matrix(j) * 0.5;
    }
    hat
}

fn magnus_log_1_with(hat_a0: &Matrix, p: &Sdde, noise: &StepNoise) -> Matrix {
    let mut omega = hat_a0 * noise.h;
    for j in 0..p.noise_dim() {
        omega += p.matrix(j + 1) * noise.dw[j];
    }
    omega
}

/// First-order log plus the commutator correction
/// 1/2 Σ_{i=0}^{m} Σ_{j=i+1}^{m} [A_i, A_j] (I_ji - I_ij), where the i = 0
/// terms use the mixed time-Wiener pair.
pub fn magnus_log_2(p: &Sdde, noise: &StepNoise) -> Result<Matrix> {
    magnus_log_2_with(&hat_a0(p), p, noise)
}

fn magnus_log_2_with(hat_a0: &Matrix, p: &Sdde, noise: &StepNoise) -> Result<Matrix> {
    let m = p.noise_dim();
    let mut omega = magnus_log_1_with(hat_a0, p, noise);
    if m == 0 {
        return Ok(omega);
    }
    let pairs = noise.time_pairs.as_ref().ok_or_else(|| {
        Error::Configuration("second-order Magnus log needs the mixed integrals I_0j, I_j0".into())
    })?;
    let doubles = noise.doubles.as_ref().ok_or_else(|| {
        Error::Configuration("second-order Magnus log needs the double integrals I_ij".into())
    })?;
    for j in 1..=m {
        let (i0j, ij0) = pairs[j - 1];
        let bracket = lie_bracket(p.matrix(0), p.matrix(j))?;
        omega += bracket * (0.5 * (ij0 - i0j));
    }
    for i in 1..=m {
        for j in i + 1..=m {
            let bracket = lie_bracket(p.matrix(i), p.matrix(j))?;
            let iji = doubles[(j - 1, i - 1)];
            let iij = doubles[(i - 1, j - 1)];
            omega += bracket * (0.5 * (iji - iij));
        }
    }
    Ok(omega)
}

/// States lagged by each delay, looked up on the trajectory.
fn delayed_states(traj: &Trajectory, n: i64, delay_steps: &[usize]) -> Result<Vec<Vector>> {
    delay_steps
        .iter()
        .map(|&p_k| traj.value_at_step(n - p_k as i64).cloned())
        .collect()
}

/// Doubly delayed arguments for the k-th delayed diffusion evaluation:
/// Y(t_n - τ_l - τ_k) for l = 1..K.
fn doubly_delayed_states(
    traj: &Trajectory,
    n: i64,
    delay_steps: &[usize],
    p_k: usize,
) -> Result<Vec<Vector>> {
    delay_steps
        .iter()
        .map(|&p_l| traj.value_at_step(n - p_l as i64 - p_k as i64).cloned())
        .collect()
}

/// Euler-Maruyama update on the (already folded) plain problem.
pub fn step_em(p: &Sdde, t_n: f64, n: i64, traj: &Trajectory, noise: &StepNoise) -> Result<Vector> {
    let y = traj.value_at_step(n)?;
    let xd = delayed_states(traj, n, traj.mesh().delay_steps())?;
    let mut out = y + p.drift(t_n, y, &xd) * noise.h;
    for j in 0..p.noise_dim() {
        out += p.diffusion(j, t_n, y, &xd) * noise.dw[j];
    }
    Ok(out)
}

/// Milstein update on the plain problem: EM terms plus immediate and
/// indicator-gated delayed Levy-area corrections.
pub fn step_milstein(
    p: &Sdde,
    t_n: f64,
    n: i64,
    traj: &Trajectory,
    noise: &StepNoise,
) -> Result<Vector> {
    let m = p.noise_dim();
    let mesh = traj.mesh();
    let y = traj.value_at_step(n)?;
    let xd = delayed_states(traj, n, mesh.delay_steps())?;

    let mut out = y + p.drift(t_n, y, &xd) * noise.h;
    let gs: Vec<Vector> = (0..m).map(|j| p.diffusion(j, t_n, y, &xd)).collect();
    for j in 0..m {
        out += &gs[j] * noise.dw[j];
    }
    if m == 0 {
        return Ok(out);
    }

    let doubles = noise.doubles.as_ref().ok_or_else(|| {
        Error::Configuration("Milstein needs double integrals; use a full StepNoise".into())
    })?;
    for j in 0..m {
        let mut weighted = Vector::zeros(p.dim());
        for i in 0..m {
            weighted += &gs[i] * doubles[(i, j)];
        }
        out += p.jacobian_state(j, t_n, y, &xd)? * weighted;
    }

    for (k, &p_k) in mesh.delay_steps().iter().enumerate() {
        if n < p_k as i64 {
            continue;
        }
        let idelay = noise.delayed.get(k).and_then(|d| d.as_ref()).ok_or_else(|| {
            Error::Configuration(format!(
                "Milstein needs the delayed double integrals for delay {}",
                k + 1
            ))
        })?;
        let t_lag = t_n - p.delays()[k];
        let y_lag = traj.value_at_step(n - p_k as i64)?;
        let xd_lag = doubly_delayed_states(traj, n, mesh.delay_steps(), p_k)?;
        let gs_lag: Vec<Vector> = (0..m).map(|i| p.diffusion(i, t_lag, y_lag, &xd_lag)).collect();
        for j in 0..m {
            let mut weighted = Vector::zeros(p.dim());
            for i in 0..m {
                weighted += &gs_lag[i] * idelay[(i, j)];
            }
            out += p.jacobian_delay(j, k, t_n, y, &xd)? * weighted;
        }
    }
    Ok(out)
}

/// MEM update: exp(Ω^[1]) applied to the inner EM-type update built from the
/// modified drift.
pub fn step_mem(p: &Sdde, t_n: f64, n: i64, traj: &Trajectory, noise: &StepNoise) -> Result<Vector> {
    step_mem_with(&hat_a0(p), p, t_n, n, traj, noise)
}

fn step_mem_with(
    hat_a0: &Matrix,
    p: &Sdde,
    t_n: f64,
    n: i64,
    traj: &Trajectory,
    noise: &StepNoise,
) -> Result<Vector> {
    let y = traj.value_at_step(n)?;
    let xd = delayed_states(traj, n, traj.mesh().delay_steps())?;
    let mut inner = y + p.f_tilde(t_n, y, &xd) * noise.h;
    for j in 0..p.noise_dim() {
        inner += p.diffusion(j, t_n, y, &xd) * noise.dw[j];
    }
    let omega = magnus_log_1_with(hat_a0, p, noise);
    Ok(mat_exp(&omega)? * inner)
}

/// MM update: exp(Ω^[2]) applied to the second-order inner update of
/// the scheme definition.
pub fn step_mm(p: &Sdde, t_n: f64, n: i64, traj: &Trajectory, noise: &StepNoise) -> Result<Vector> {
    step_mm_with(&hat_a0(p), p, t_n, n, traj, noise)
}

fn step_mm_with(
    hat_a0: &Matrix,
    p: &Sdde,
    t_n: f64,
    n: i64,
    traj: &Trajectory,
    noise: &StepNoise,
) -> Result<Vector> {
    let m = p.noise_dim();
    let mesh = traj.mesh();
    let y = traj.value_at_step(n)?;
    let xd = delayed_states(traj, n, mesh.delay_steps())?;

    let mut inner = y + p.f_tilde(t_n, y, &xd) * noise.h;
    let gs: Vec<Vector> = (0..m).map(|j| p.diffusion(j, t_n, y, &xd)).collect();
    for j in 0..m {
        inner += &gs[j] * noise.dw[j];
    }

    if m > 0 {
        let doubles = noise.doubles.as_ref().ok_or_else(|| {
            Error::Configuration("MM needs double integrals; use a full StepNoise".into())
        })?;
        // Σ_ij (∇_x g_j [A_i Y + g_i] - A_i g_j) I_ij
        let lifted: Vec<Vector> = (0..m).map(|i| p.matrix(i + 1) * y + &gs[i]).collect();
        for j in 0..m {
            let mut weighted = Vector::zeros(p.dim());
            for i in 0..m {
                weighted += &lifted[i] * doubles[(i, j)];
            }
            inner += p.jacobian_state(j, t_n, y, &xd)? * weighted;
        }
        for i in 0..m {
            let mut weighted = Vector::zeros(p.dim());
            for j in 0..m {
                weighted += &gs[j] * doubles[(i, j)];
            }
            inner -= p.matrix(i + 1) * weighted;
        }

        // Delayed block, gated by the indicator t_n >= τ_k.
        for (k, &p_k) in mesh.delay_steps().iter().enumerate() {
            if n < p_k as i64 {
                continue;
            }
            let idelay = noise.delayed.get(k).and_then(|d| d.as_ref()).ok_or_else(|| {
                Error::Configuration(format!(
                    "MM needs the delayed double integrals for delay {}",
                    k + 1
                ))
            })?;
            let t_lag = t_n - p.delays()[k];
            let y_lag = traj.value_at_step(n - p_k as i64)?;
            let xd_lag = doubly_delayed_states(traj, n, mesh.delay_steps(), p_k)?;
            let lifted_lag: Vec<Vector> = (0..m)
                .map(|i| p.matrix(i + 1) * y_lag + p.diffusion(i, t_lag, y_lag, &xd_lag))
                .collect();
            for j in 0..m {
                let mut weighted = Vector::zeros(p.dim());
                for i in 0..m {
                    weighted += &lifted_lag[i] * idelay[(i, j)];
                }
                inner += p.jacobian_delay(j, k, t_n, y, &xd)? * weighted;
            }
        }
    }

    let omega = magnus_log_2_with(hat_a0, p, noise)?;
    Ok(mat_exp(&omega)? * inner)
}

/// Integrate the problem over the mesh, driving every stochastic quantity
/// from the given lattice. `subintervals` is the F of the two-sum integral
/// rules; the convergence harness passes h / h_ref.
pub fn integrate(
    p: &Sdde,
    kind: SchemeKind,
    rule: IntegralRule,
    mesh: &TimeMesh,
    lat: &WienerLattice,
    subintervals: usize,
) -> Result<Trajectory> {
    if p.noise_dim() != lat.path_count() {
        return Err(Error::Configuration(format!(
            "problem has m = {} noise dimensions but lattice has {} paths",
            p.noise_dim(),
            lat.path_count()
        )));
    }
    let h = mesh.h();
    if mesh.delay_steps().len() != p.delay_count()
        || mesh
            .delay_steps()
            .iter()
            .zip(p.delays())
            .any(|(&pk, &tau)| (pk as f64 * h - tau).abs() > 1e-9 * tau.max(1.0))
    {
        return Err(Error::Configuration(
            "mesh was not built with the problem's delays".into(),
        ));
    }
    let ratio = h / lat.h_ref();
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio < 1.0 - 1e-9 {
        return Err(Error::MeshAlignment(format!(
            "mesh step {h} is not an integer multiple of the lattice step {}",
            lat.h_ref()
        )));
    }
    if mesh.horizon() > lat.horizon() * (1.0 + 1e-12) {
        return Err(Error::MeshAlignment(format!(
            "mesh horizon {} exceeds lattice horizon {}",
            mesh.horizon(),
            lat.horizon()
        )));
    }
    if kind.needs_jacobians() && !p.has_jacobians() {
        return Err(Error::Configuration(format!(
            "{kind} needs Jacobians; provide them or call with_fd_jacobians()"
        )));
    }
    // A delay-divisible mesh already forces h <= min delay; the STEP noise
    // constructor re-checks it for direct callers.

    let folded;
    let scheme_problem = match kind {
        SchemeKind::Em | SchemeKind::Milstein => {
            folded = p.as_plain();
            &folded
        }
        SchemeKind::Mem | SchemeKind::Mm => p,
    };
    let hat = match kind {
        SchemeKind::Mem | SchemeKind::Mm => Some(hat_a0(scheme_problem)),
        _ => None,
    };

    let mut traj = Trajectory::with_history(mesh.clone(), p);
    for n in 0..mesh.steps() {
        let t_n = mesh.time(n as i64);
        let noise = match kind {
            SchemeKind::Em | SchemeKind::Mem => StepNoise::increments_only(lat, t_n, h)?,
            SchemeKind::Milstein | SchemeKind::Mm => {
                StepNoise::with_rule(lat, t_n, h, subintervals, p.delays(), rule)?
            }
        };
        let next = match kind {
            SchemeKind::Em => step_em(scheme_problem, t_n, n as i64, &traj, &noise)?,
            SchemeKind::Milstein => step_milstein(scheme_problem, t_n, n as i64, &traj, &noise)?,
            SchemeKind::Mem => {
                step_mem_with(hat.as_ref().unwrap(), scheme_problem, t_n, n as i64, &traj, &noise)?
            }
            SchemeKind::Mm => {
                step_mm_with(hat.as_ref().unwrap(), scheme_problem, t_n, n as i64, &traj, &noise)?
            }
        };
        let blown = next.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD);
        traj.push(next);
        if blown {
            traj.mark_diverged(n + 1);
            break;
        }
    }
    Ok(traj)
}
