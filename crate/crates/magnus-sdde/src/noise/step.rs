//! Per-coarse-step stochastic quantities derived from a lattice.
//!
//! Diagonal double integrals use the exact identity
//! `I_jj = (ΔW_j² - h) / 2`; off-diagonal and delayed ones are assembled from
//! fine increments by one of three rules of decreasing fidelity: trapezium
//! (both partial sums), rectangle (tail sum only), or the one-term Riemann
//! product `ΔW_i ΔW_j / 2`.

use super::WienerLattice;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralRule {
    Trapezium,
    Rectangle,
    Riemann,
}

impl std::fmt::Display for IntegralRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IntegralRule::Trapezium => "trapezium",
            IntegralRule::Rectangle => "rectangle",
            IntegralRule::Riemann => "riemann",
        };
        f.write_str(s)
    }
}

/// Everything the one-step maps consume for a single coarse step.
#[derive(Debug, Clone)]
pub struct StepNoise {
    pub h: f64,
    /// ΔW_j over the step, j = 0..m (zero-based path index).
    pub dw: Vec<f64>,
    /// I_ij for i, j = 0..m; diagonal from the exact identity. `None` when
    /// only increments were requested.
    pub doubles: Option<DMatrix<f64>>,
    /// (I_{0j}, I_{j0}) per j, with I_{0j} defined as h ΔW_j - I_{j0}.
    pub time_pairs: Option<Vec<(f64, f64)>>,
    /// Delayed doubles I_ij^{τ_k}, one entry per requested delay; `None`
    /// where t_n < τ_k (the integral is never needed there).
    pub delayed: Vec<Option<DMatrix<f64>>>,
}

impl StepNoise {
    /// Increments only; enough for the EM and MEM schemes.
    pub fn increments_only(lat: &WienerLattice, t_n: f64, h: f64) -> Result<Self> {
        let (n0, n1) = step_range(lat, t_n, h)?;
        let dw = (0..lat.path_count())
            .map(|j| lat.increment_by_index(j, n0, n1))
            .collect();
        Ok(Self {
            h,
            dw,
            doubles: None,
            time_pairs: None,
            delayed: Vec::new(),
        })
    }

    pub fn with_rule(
        lat: &WienerLattice,
        t_n: f64,
        h: f64,
        subintervals: usize,
        delays: &[f64],
        rule: IntegralRule,
    ) -> Result<Self> {
        let m = lat.path_count();
        let (n0, n1) = step_range(lat, t_n, h)?;
        let fine = n1 - n0;
        if subintervals == 0 || fine % subintervals != 0 {
            return Err(Error::MeshAlignment(format!(
                "{subintervals} subintervals do not divide the {fine} fine steps of h = {h}"
            )));
        }
        if !delays.is_empty() {
            let tau_min = delays.iter().cloned().fold(f64::INFINITY, f64::min);
            if h > tau_min * (1.0 + 1e-12) {
                return Err(Error::StepSize { h, tau_min });
            }
        }

        let dw: Vec<f64> = (0..m).map(|j| lat.increment_by_index(j, n0, n1)).collect();

        let mut doubles = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                doubles[(i, j)] = if i == j {
                    0.5 * (dw[j] * dw[j] - h)
                } else {
                    double_integral(lat, rule, i, j, n0, fine, subintervals, 0)
                };
            }
        }

        let time_pairs = (0..m)
            .map(|j| {
                let ij0 = time_wiener_integral(lat, j, n0, n1);
                (h * dw[j] - ij0, ij0)
            })
            .collect();

        let mut delayed = Vec::with_capacity(delays.len());
        for &tau in delays {
            let shift = lat.index_of(tau)?;
            if n0 < shift {
                delayed.push(None);
                continue;
            }
            let mut mat = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    mat[(i, j)] = double_integral(lat, rule, i, j, n0, fine, subintervals, shift);
                }
            }
            delayed.push(Some(mat));
        }

        Ok(Self {
            h,
            dw,
            doubles: Some(doubles),
            time_pairs: Some(time_pairs),
            delayed,
        })
    }
}

fn step_range(lat: &WienerLattice, t_n: f64, h: f64) -> Result<(usize, usize)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step size {h} must be > 0")));
    }
    let n0 = lat.index_of(t_n)?;
    let n1 = lat.index_of(t_n + h)?;
    if n1 <= n0 {
        return Err(Error::MeshAlignment(format!(
            "step [{t_n}, {}] collapses on the lattice",
            t_n + h
        )));
    }
    Ok((n0, n1))
}

/// Two-sum approximation of the double integral over one coarse step, with
/// the inner path shifted back by `shift` fine indices (0 = non-delayed).
/// The first (half-product) sum is dropped for `Rectangle`; `Riemann` is the
/// single product over the whole step.
fn double_integral(
    lat: &WienerLattice,
    rule: IntegralRule,
    path_i: usize,
    path_j: usize,
    n0: usize,
    fine: usize,
    subintervals: usize,
    shift: usize,
) -> f64 {
    let stride = fine / subintervals;
    let sub = |l: usize| n0 + l * stride;
    let inc_i =
        |a: usize, b: usize| lat.increment_by_index(path_i, sub(a) - shift, sub(b) - shift);
    let inc_j = |a: usize, b: usize| lat.increment_by_index(path_j, sub(a), sub(b));

    if rule == IntegralRule::Riemann {
        return 0.5 * inc_i(0, subintervals) * inc_j(0, subintervals);
    }
    let mut halves = 0.0;
    let mut tails = 0.0;
    for l in 0..subintervals {
        let a = inc_i(l, l + 1);
        halves += 0.5 * a * inc_j(l, l + 1);
        tails += a * inc_j(l + 1, subintervals);
    }
    match rule {
        IntegralRule::Trapezium => halves + tails,
        IntegralRule::Rectangle => tails,
        IntegralRule::Riemann => unreachable!(),
    }
}

/// I_{j0} = ∫ (W_j(s) - W_j(t_n)) ds over the step, composite trapezoid on
/// the fine lattice.
fn time_wiener_integral(lat: &WienerLattice, path: usize, n0: usize, n1: usize) -> f64 {
    let w0 = lat.value(path, n0);
    let mut acc = 0.0;
    for k in n0 + 1..n1 {
        acc += lat.value(path, k) - w0;
    }
    acc += 0.5 * (lat.value(path, n1) - w0);
    acc * lat.h_ref()
}

/// Trapezium-rule noise for one coarse step (the default used by the
/// Milstein-type schemes).
pub fn step_noise(
    lat: &WienerLattice,
    t_n: f64,
    h: f64,
    subintervals: usize,
    delays: &[f64],
) -> Result<StepNoise> {
    StepNoise::with_rule(lat, t_n, h, subintervals, delays, IntegralRule::Trapezium)
}

/// As [`step_noise`] but with the rectangle rule for off-diagonal doubles.
pub fn step_noise_rectangle(
    lat: &WienerLattice,
    t_n: f64,
    h: f64,
    subintervals: usize,
    delays: &[f64],
) -> Result<StepNoise> {
    StepNoise::with_rule(lat, t_n, h, subintervals, delays, IntegralRule::Rectangle)
}

/// As [`step_noise`] but with the one-term Riemann product.
pub fn step_noise_riemann(
    lat: &WienerLattice,
    t_n: f64,
    h: f64,
    subintervals: usize,
    delays: &[f64],
) -> Result<StepNoise> {
    StepNoise::with_rule(lat, t_n, h, subintervals, delays, IntegralRule::Riemann)
}
