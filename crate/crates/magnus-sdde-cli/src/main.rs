//! Command line for the SDDE integrators.
//!
//! Subcommands: `converge` (Monte Carlo error graphs), `simulate` (single
//! trajectory), `spdde` (delayed-cooling heat equation field), `qwiener`
//! (Q-Wiener sample field). All numeric values accept `2^-k` or decimal
//! form. Exit codes: 0 success, 2 configuration/alignment error,
//! 3 divergence detected (partial output written).

use clap::{Args, Parser, Subcommand};
use magnus_sdde::emit;
use magnus_sdde::experiment;
use magnus_sdde::model::build_mesh;
use magnus_sdde::noise::{KlKind, PathStream, WienerLattice};
use magnus_sdde::parse::{parse_number, parse_step_list};
use magnus_sdde::presets;
use magnus_sdde::schemes::{integrate, SchemeKind};
use magnus_sdde::spdde::{assemble, slice, stability_threshold, HeatProblem, SliceAxis};
use magnus_sdde::{Error, IntegralRule};
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "magnus-sdde", version, about = "Strong SDDE integration: Magnus-type and Taylor schemes, convergence experiments, heat-equation fields")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte Carlo convergence experiment and emit CSV + SVG error graphs
    Converge(ConvergeArgs),
    /// Integrate one trajectory of a preset problem and emit it as CSV
    Simulate(SimulateArgs),
    /// Simulate the delayed-cooling stochastic heat equation and emit the field
    Spdde(SpddeArgs),
    /// Sample a truncated Q-Wiener field on a space-time grid
    Qwiener(QwienerArgs),
}

fn num(s: &str) -> Result<f64, String> {
    parse_number(s).map_err(|e| e.to_string())
}

fn scheme(s: &str) -> Result<SchemeKind, String> {
    SchemeKind::parse(s).map_err(|e| e.to_string())
}

fn rule(s: &str) -> Result<IntegralRule, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "trapezium" => Ok(IntegralRule::Trapezium),
        "rectangle" => Ok(IntegralRule::Rectangle),
        "riemann" => Ok(IntegralRule::Riemann),
        other => Err(format!("unknown integral rule `{other}`")),
    }
}

fn noise_kind(s: &str) -> Result<KlKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "uncorrelated" => Ok(KlKind::Uncorrelated),
        "correlated" => Ok(KlKind::BrownianSheetMin),
        other => Err(format!("unknown noise kind `{other}`")),
    }
}

#[derive(Args)]
struct ConvergeArgs {
    /// Problem preset: example1, example2, example3, gbm, spdde-heat
    #[arg(long)]
    preset: String,
    /// Comma-separated schemes to run
    #[arg(long)]
    schemes: Option<String>,
    /// Step sizes, e.g. `2^-3..2^-8` or `0.25,0.125`
    #[arg(long)]
    steps: Option<String>,
    /// Reference (fine) step size
    #[arg(long, value_parser = num)]
    href: Option<f64>,
    /// Reference scheme (defaults to the preset's)
    #[arg(long, value_parser = scheme)]
    ref_scheme: Option<SchemeKind>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.csv and report.svg
    #[arg(long)]
    out: PathBuf,
    /// Off-diagonal double-integral rule
    #[arg(long, value_parser = rule)]
    rule: Option<IntegralRule>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    preset: String,
    #[arg(long, value_parser = scheme)]
    scheme: SchemeKind,
    /// Coarse step size
    #[arg(long, value_parser = num)]
    step: f64,
    /// Fine lattice step (defaults to the coarse step)
    #[arg(long, value_parser = num)]
    href: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = rule, default_value = "trapezium")]
    rule: IntegralRule,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[allow(non_snake_case)]
struct SpddeArgs {
    /// Spatial interval count (Δx = 1/d)
    #[arg(long, default_value_t = 50)]
    d: usize,
    /// Diffusion coefficient
    #[arg(long = "D", value_parser = num, default_value = "0.04")]
    diffusion: f64,
    /// Noise scale (0 = deterministic)
    #[arg(long, value_parser = num, default_value = "0.15")]
    c: f64,
    /// Cooling delay
    #[arg(long, value_parser = num, default_value = "1")]
    tau: f64,
    #[arg(long, value_parser = num, default_value = "1")]
    ra: f64,
    #[arg(long, value_parser = num, default_value = "10")]
    rb: f64,
    /// correlated | uncorrelated
    #[arg(long, value_parser = noise_kind, default_value = "correlated")]
    noise: KlKind,
    #[arg(long, value_parser = scheme, default_value = "mem")]
    scheme: SchemeKind,
    #[arg(long, value_parser = num)]
    step: f64,
    /// Fine lattice step (defaults to the coarse step)
    #[arg(long, value_parser = num)]
    href: Option<f64>,
    /// Noise modes (defaults to d)
    #[arg(long)]
    modes: Option<usize>,
    /// Horizon
    #[arg(long = "T", value_parser = num, default_value = "6")]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = rule, default_value = "trapezium")]
    rule: IntegralRule,
    /// Output CSV path for the field
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG heat map
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
#[allow(non_snake_case)]
struct QwienerArgs {
    /// correlated | uncorrelated
    #[arg(long, value_parser = noise_kind, default_value = "correlated")]
    kind: KlKind,
    #[arg(long, default_value_t = 50)]
    modes: usize,
    /// Fine time step
    #[arg(long, value_parser = num)]
    href: f64,
    #[arg(long = "T", value_parser = num)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep every n-th time row
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Converge(a) => converge(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Spdde(a) => spdde_field(a),
        Cmd::Qwiener(a) => qwiener(a),
    };
    match outcome {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => {
            eprintln!("divergence detected; partial output written");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

enum Outcome {
    Clean,
    Diverged,
}

fn converge(a: ConvergeArgs) -> Result<Outcome, Error> {
    let (problem, mut cfg) = experiment::preset(&a.preset)?;
    if let Some(s) = &a.schemes {
        cfg.schemes = s
            .split(',')
            .map(SchemeKind::parse)
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(s) = &a.steps {
        cfg.steps = parse_step_list(s)?;
    }
    if let Some(h) = a.href {
        cfg.h_ref = h;
    }
    if let Some(r) = a.ref_scheme {
        cfg.ref_scheme = r;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.rule {
        cfg.rule = r;
    }
    cfg.parallel = a.parallel.or(cfg.parallel);

    let report = experiment::run_convergence_on(&problem, &cfg)?;
    emit::write_report_csv(&report, a.out.join("report.csv"))?;
    emit::write_report_svg(&report, a.out.join("report.svg"))?;

    println!(
        "preset {} | {} trials | h_ref {} | {:.1}s",
        report.preset, report.trials, report.h_ref, report.runtime_secs
    );
    let mut any_diverged = false;
    for s in &report.series {
        let slope = s
            .slope
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "n/a".into());
        let tail = if s.diverged.is_empty() {
            String::new()
        } else {
            any_diverged = true;
            format!(" (diverged at h = {:?})", s.diverged)
        };
        println!("  {:>8}: slope {slope}{tail}", s.scheme.name());
    }
    println!("wrote {}", a.out.join("report.csv").display());
    Ok(if any_diverged {
        Outcome::Diverged
    } else {
        Outcome::Clean
    })
}

fn simulate(a: SimulateArgs) -> Result<Outcome, Error> {
    let p = presets::by_name(&a.preset)?;
    let h_ref = a.href.unwrap_or(a.step);
    let mesh = build_mesh(p.horizon(), a.step, p.delays())?;
    let lat = WienerLattice::sample(p.noise_dim(), p.horizon(), h_ref, a.seed)?;
    let f = (a.step / h_ref).round() as usize;
    let traj = integrate(&p, a.scheme, a.rule, &mesh, &lat, f.max(1))?;
    emit::write_trajectory_csv(&traj, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(if traj.diverged() {
        Outcome::Diverged
    } else {
        Outcome::Clean
    })
}

fn spdde_field(a: SpddeArgs) -> Result<Outcome, Error> {
    let hp = HeatProblem::new(
        a.d,
        a.diffusion,
        a.c,
        a.tau,
        a.ra,
        a.rb,
        a.noise,
        a.horizon,
        Arc::new(|x: f64| (std::f64::consts::TAU * x).sin()),
    )?;
    let h_max = stability_threshold(&hp);
    if a.step >= h_max {
        eprintln!(
            "note: step {} is at or above the explicit-Euler stability threshold {h_max}",
            a.step
        );
    }
    let modes = a.modes.unwrap_or(a.d);
    let p = assemble(&hp, modes)?;
    let h_ref = a.href.unwrap_or(a.step);
    let mesh = build_mesh(a.horizon, a.step, p.delays())?;
    let lat = WienerLattice::sample(p.noise_dim(), a.horizon, h_ref, a.seed)?;
    let f = ((a.step / h_ref).round() as usize).max(1);
    let traj = integrate(&p, a.scheme, a.rule, &mesh, &lat, f)?;

    let mut times = Vec::new();
    let mut rows = Vec::new();
    let mut grid = Vec::new();
    for n in 0..=traj.last_step().max(0) {
        let t = mesh.time(n);
        let s = slice(&traj, &hp, SliceAxis::TimeFixed, t)?;
        if grid.is_empty() {
            grid = s.positions.clone();
        }
        times.push(t);
        rows.push(s.values);
    }
    emit::write_field_csv(&grid, &times, &rows, &a.out)?;
    if let Some(svg) = &a.svg {
        emit::write_field_svg(&grid, &times, &rows, svg)?;
    }
    println!("wrote {}", a.out.display());
    Ok(if traj.diverged() {
        Outcome::Diverged
    } else {
        Outcome::Clean
    })
}

fn qwiener(a: QwienerArgs) -> Result<Outcome, Error> {
    if a.modes == 0 || a.stride == 0 {
        return Err(Error::InvalidArgument(
            "modes and stride must be >= 1".into(),
        ));
    }
    let steps = {
        let r = a.horizon / a.href;
        let k = r.round();
        if (r - k).abs() > 1e-9 * r.abs().max(1.0) || k < 0.0 {
            return Err(Error::MeshAlignment(format!(
                "horizon {} is not an integer multiple of href {}",
                a.horizon, a.href
            )));
        }
        k as usize
    };
    let grid: Vec<f64> = (0..=a.modes).map(|j| j as f64 / a.modes as f64).collect();
    // mode weights at the grid points; the identity kernel routes mode j to
    // grid point j alone
    let weights: Vec<Vec<f64>> = match a.kind {
        KlKind::Uncorrelated => Vec::new(),
        KlKind::BrownianSheetMin => (1..=a.modes)
            .map(|j| {
                let amp = magnus_sdde::noise::sheet_min_eigenvalue(j).sqrt();
                grid.iter()
                    .map(|&x| amp * magnus_sdde::noise::sheet_min_eigenfunction(j, x))
                    .collect()
            })
            .collect(),
    };

    if let Some(parent) = a.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = std::fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut w = std::io::BufWriter::new(file);
    let emit_io = |e: std::io::Error| Error::io(&a.out, e);
    write!(w, "t").map_err(emit_io)?;
    for x in &grid {
        write!(w, ",{x:.16e}").map_err(emit_io)?;
    }
    writeln!(w).map_err(emit_io)?;

    let mut stream = PathStream::new(a.modes, a.href, a.seed)?;
    for n in 0..=steps {
        let row = stream.next_row();
        if n % a.stride != 0 {
            continue;
        }
        let t = n as f64 * a.href;
        write!(w, "{t:.16e}").map_err(emit_io)?;
        match a.kind {
            KlKind::Uncorrelated => {
                for i in 0..=a.modes {
                    let v = if i >= 1 { row[i - 1] } else { 0.0 };
                    write!(w, ",{v:.16e}").map_err(emit_io)?;
                }
            }
            KlKind::BrownianSheetMin => {
                for i in 0..=a.modes {
                    let v: f64 = (0..a.modes).map(|j| weights[j][i] * row[j]).sum();
                    write!(w, ",{v:.16e}").map_err(emit_io)?;
                }
            }
        }
        writeln!(w).map_err(emit_io)?;
    }
    w.flush().map_err(emit_io)?;
    println!("wrote {}", a.out.display());
    Ok(Outcome::Clean)
}
