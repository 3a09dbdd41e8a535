//! Monte Carlo convergence-order harness.
//!
//! Per trial, one lattice drives the reference solution and every scheme at
//! every step size (common random numbers), so the root-mean-square gap at
//! the horizon measures strong error. Trials run in parallel; aggregation is
//! in fixed trial order, so the report is independent of scheduling.

use crate::error::{Error, Result};
use crate::model::{build_mesh, Sdde};
use crate::noise::{IntegralRule, WienerLattice};
use crate::presets;
use crate::schemes::{integrate, SchemeKind};
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: String,
    pub schemes: Vec<SchemeKind>,
    pub rule: IntegralRule,
    /// Coarse step sizes; each must be an integer multiple of `h_ref`.
    pub steps: Vec<f64>,
    pub h_ref: f64,
    pub ref_scheme: SchemeKind,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses all cores, `Some(1)` is sequential.
    pub parallel: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SchemeSeries {
    pub scheme: SchemeKind,
    /// (h, mse) for runs that completed every trial.
    pub points: Vec<(f64, f64)>,
    /// Step sizes at which at least one trial diverged.
    pub diverged: Vec<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub preset: String,
    pub series: Vec<SchemeSeries>,
    pub trials: usize,
    pub h_ref: f64,
    pub runtime_secs: f64,
}

/// Problem plus desk-scale default configuration for a named preset. The
/// reference scheme is Milstein except for the heat equation, which uses EM.
pub fn preset(name: &str) -> Result<(Sdde, ExperimentConfig)> {
    let problem = presets::by_name(name)?;
    let all = vec![
        SchemeKind::Em,
        SchemeKind::Milstein,
        SchemeKind::Mem,
        SchemeKind::Mm,
    ];
    let cfg = match name.trim().to_ascii_lowercase().as_str() {
        "example3" => ExperimentConfig {
            preset: name.into(),
            schemes: all,
            rule: IntegralRule::Trapezium,
            steps: halvings(-2, -7),
            h_ref: 2f64.powi(-12),
            ref_scheme: SchemeKind::Milstein,
            trials: 200,
            seed: 42,
            parallel: None,
        },
        "spdde-heat" => ExperimentConfig {
            preset: name.into(),
            schemes: vec![SchemeKind::Em, SchemeKind::Mem],
            rule: IntegralRule::Trapezium,
            steps: halvings(-8, -10),
            h_ref: 2f64.powi(-12),
            ref_scheme: SchemeKind::Em,
            trials: 50,
            seed: 42,
            parallel: None,
        },
        _ => ExperimentConfig {
            preset: name.into(),
            schemes: all,
            rule: IntegralRule::Trapezium,
            steps: halvings(-3, -8),
            h_ref: 2f64.powi(-12),
            ref_scheme: SchemeKind::Milstein,
            trials: 200,
            seed: 42,
            parallel: None,
        },
    };
    Ok((problem, cfg))
}

fn halvings(from: i32, to: i32) -> Vec<f64> {
    (to..=from).rev().map(|k| 2f64.powi(k)).collect()
}

/// Per-trial seed: the base seed mixed with the trial index, so trials are
/// decorrelated and independent of execution order.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ordinary least squares of ln(mse) on ln(h).
pub fn fit_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(h, e)| h <= 0.0 || e <= 0.0) {
        return Err(Error::InvalidArgument(
            "slope fit needs positive step sizes and errors".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    Ok((slope, ybar - slope * xbar))
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let problem = presets::by_name(&cfg.preset)?;
    run_convergence_on(&problem, cfg)
}

pub fn run_convergence_on(problem: &Sdde, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let start = Instant::now();
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trial count must be >= 1".into()));
    }
    if cfg.schemes.is_empty() || cfg.steps.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one scheme and one step size".into(),
        ));
    }
    let horizon = problem.horizon();
    let ref_mesh = build_mesh(horizon, cfg.h_ref, problem.delays())?;
    let meshes = cfg
        .steps
        .iter()
        .map(|&h| {
            let ratio = h / cfg.h_ref;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio < 1.0 - 1e-9 {
                return Err(Error::MeshAlignment(format!(
                    "step {h} is not an integer multiple of h_ref = {}",
                    cfg.h_ref
                )));
            }
            build_mesh(horizon, h, problem.delays())
        })
        .collect::<Result<Vec<_>>>()?;

    // squared errors per trial: per scheme, per step, None = diverged
    let trial_errors = |trial: usize| -> Result<Vec<Vec<Option<f64>>>> {
        let lat = WienerLattice::sample(
            problem.noise_dim(),
            horizon,
            cfg.h_ref,
            trial_seed(cfg.seed, trial as u64),
        )?;
        let reference = integrate(problem, cfg.ref_scheme, cfg.rule, &ref_mesh, &lat, 1)?;
        let x_t = reference.final_value().cloned();
        cfg.schemes
            .iter()
            .map(|&scheme| {
                cfg.steps
                    .iter()
                    .zip(&meshes)
                    .map(|(&h, mesh)| {
                        let x_t = match &x_t {
                            Some(v) => v,
                            None => return Ok(None), // reference diverged
                        };
                        let f = (h / cfg.h_ref).round() as usize;
                        let traj = integrate(problem, scheme, cfg.rule, mesh, &lat, f)?;
                        Ok(traj.final_value().map(|y| (y - x_t).norm_squared()))
                    })
                    .collect()
            })
            .collect()
    };

    let per_trial: Vec<Result<Vec<Vec<Option<f64>>>>> = match cfg.parallel {
        Some(1) => (0..cfg.trials).map(trial_errors).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(|| (0..cfg.trials).into_par_iter().map(trial_errors).collect()),
        None => (0..cfg.trials).into_par_iter().map(trial_errors).collect(),
    };
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;

    // Aggregate in trial order.
    let mut series = Vec::with_capacity(cfg.schemes.len());
    for (si, &scheme) in cfg.schemes.iter().enumerate() {
        let mut points = Vec::new();
        let mut diverged = Vec::new();
        for (hi, &h) in cfg.steps.iter().enumerate() {
            let mut sum = 0.0;
            let mut ok = true;
            for errors in &per_trial {
                match errors[si][hi] {
                    Some(sq) => sum += sq,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                points.push((h, (sum / cfg.trials as f64).sqrt()));
            } else {
                diverged.push(h);
            }
        }
        let fit_points: Vec<(f64, f64)> =
            points.iter().cloned().filter(|&(_, e)| e > 0.0).collect();
        let (slope, intercept) = match fit_slope(&fit_points) {
            Ok((s, i)) => (Some(s), Some(i)),
            Err(_) => (None, None),
        };
        series.push(SchemeSeries {
            scheme,
            points,
            diverged,
            slope,
            intercept,
        });
    }

    Ok(ConvergenceReport {
        preset: cfg.preset.clone(),
        series,
        trials: cfg.trials,
        h_ref: cfg.h_ref,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}
