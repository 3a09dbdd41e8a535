//! Randomness for the integrators.
//!
//! Everything stochastic derives from one fine-mesh lattice of Wiener paths:
//! coarse increments, iterated double integrals (exact diagonal identity,
//! trapezium / rectangle / Riemann off-diagonal rules, delayed variants),
//! time-Wiener mixed integrals, and truncated Q-Wiener fields.

mod kl;
mod lattice;
mod step;

pub use kl::{sample_q_wiener, sheet_min_eigenfunction, sheet_min_eigenvalue, KlBasis, KlKind};
pub use lattice::{lattice_sample_count, PathStream, WienerLattice};
pub use step::{step_noise, step_noise_rectangle, step_noise_riemann, IntegralRule, StepNoise};
