//! Strong numerical integration of semilinear Ito stochastic delay-differential
//! equations.
//!
//! The crate provides exponential (Magnus-type) Euler-Maruyama and Milstein
//! schemes next to the classical Taylor baselines, the fine-mesh Wiener
//! lattice and iterated-integral machinery that drives them, a
//! delayed-cooling stochastic heat equation front-end, and a Monte Carlo
//! convergence-order harness with CSV/SVG emission.

pub mod emit;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod parse;
pub mod presets;
pub mod schemes;
pub mod spdde;

pub use error::{Error, Result};
pub use linalg::{lie_bracket, mat_exp, Matrix, Vector};
pub use model::{bellman_intervals, build_mesh, BellmanBreakpoints, Sdde, TimeMesh, Trajectory};
pub use noise::{
    sample_q_wiener, step_noise, step_noise_rectangle, step_noise_riemann, IntegralRule, KlBasis,
    KlKind, StepNoise, WienerLattice,
};
pub use schemes::{integrate, SchemeKind};
