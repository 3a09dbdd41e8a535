//! Truncated Karhunen-Loeve representation of Q-Wiener noise.
//!
//! Two covariance choices: `Uncorrelated` (identity kernel; on a grid, mode j
//! drives grid point j alone) and `BrownianSheetMin` (kernel min(x, y) with
//! closed-form eigenpairs).

use super::WienerLattice;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlKind {
    Uncorrelated,
    BrownianSheetMin,
}

/// Eigenvalue of the min(x, y) kernel: 4 / (pi^2 (2j - 1)^2), j >= 1.
pub fn sheet_min_eigenvalue(j: usize) -> f64 {
    let k = (2 * j - 1) as f64;
    4.0 / (std::f64::consts::PI * std::f64::consts::PI * k * k)
}

/// Eigenfunction of the min(x, y) kernel: sqrt(2) sin(x / sqrt(lambda_j)).
pub fn sheet_min_eigenfunction(j: usize, x: f64) -> f64 {
    std::f64::consts::SQRT_2 * (x / sheet_min_eigenvalue(j).sqrt()).sin()
}

#[derive(Debug, Clone, Copy)]
pub struct KlBasis {
    pub kind: KlKind,
    pub modes: usize,
}

impl KlBasis {
    pub fn new(kind: KlKind, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("KL basis needs modes >= 1".into()));
        }
        Ok(Self { kind, modes })
    }

    /// λ_j for mode j = 1..modes (1 for the identity kernel).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        match self.kind {
            KlKind::Uncorrelated => 1.0,
            KlKind::BrownianSheetMin => sheet_min_eigenvalue(j),
        }
    }

    /// Weight of mode j at grid position `grid_idx` / coordinate `x`:
    /// sqrt(λ_j) φ_j(x) for the min kernel, the grid indicator for the
    /// uncorrelated kind.
    pub fn mode_weight(&self, j: usize, grid_idx: usize, x: f64) -> f64 {
        match self.kind {
            KlKind::Uncorrelated => {
                if grid_idx == j {
                    1.0
                } else {
                    0.0
                }
            }
            KlKind::BrownianSheetMin => sheet_min_eigenvalue(j).sqrt() * sheet_min_eigenfunction(j, x),
        }
    }
}

/// Truncated field W^c(t, x) = Σ_j sqrt(λ_j) φ_j(x) W_j(t) at the grid points.
pub fn sample_q_wiener(
    basis: &KlBasis,
    lat: &WienerLattice,
    grid: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    if basis.modes > lat.path_count() {
        return Err(Error::Configuration(format!(
            "{} modes requested but lattice has {} paths",
            basis.modes,
            lat.path_count()
        )));
    }
    let idx = lat.index_of(t)?;
    let w: Vec<f64> = (1..=basis.modes).map(|j| lat.value(j - 1, idx)).collect();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            (1..=basis.modes)
                .map(|j| basis.mode_weight(j, i, x) * w[j - 1])
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_eigenvalues_match_closed_form() {
        assert!((sheet_min_eigenvalue(1) - 0.405285).abs() < 1e-6);
        assert!((sheet_min_eigenvalue(2) - 0.045032).abs() < 1e-6);
    }

    #[test]
    fn eigenfunctions_vanish_at_origin() {
        for j in 1..=8 {
            assert_eq!(sheet_min_eigenfunction(j, 0.0), 0.0);
        }
        let basis = KlBasis::new(KlKind::Uncorrelated, 4).unwrap();
        for j in 1..=4 {
            assert_eq!(basis.mode_weight(j, 0, 0.0), 0.0);
        }
    }

    #[test]
    fn zero_modes_rejected() {
        assert!(KlBasis::new(KlKind::BrownianSheetMin, 0).is_err());
    }

    #[test]
    fn field_vanishes_at_time_zero() {
        let lat = WienerLattice::sample(3, 1.0, 0.25, 8).unwrap();
        let basis = KlBasis::new(KlKind::BrownianSheetMin, 3).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let field = sample_q_wiener(&basis, &lat, &grid, 0.0).unwrap();
        assert!(field.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_field_is_scaled_path() {
        let lat = WienerLattice::sample(1, 1.0, 0.25, 9).unwrap();
        let basis = KlBasis::new(KlKind::BrownianSheetMin, 1).unwrap();
        let grid = [0.3, 0.7];
        let field = sample_q_wiener(&basis, &lat, &grid, 0.5).unwrap();
        let w = lat.value(0, 2);
        for (i, &x) in grid.iter().enumerate() {
            let want = sheet_min_eigenvalue(1).sqrt() * sheet_min_eigenfunction(1, x) * w;
            assert_eq!(field[i], want);
        }
    }

    #[test]
    fn uncorrelated_mode_drives_matching_grid_point() {
        let lat = WienerLattice::sample(3, 1.0, 0.5, 10).unwrap();
        let basis = KlBasis::new(KlKind::Uncorrelated, 3).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let field = sample_q_wiener(&basis, &lat, &grid, 1.0).unwrap();
        assert_eq!(field[0], 0.0);
        for j in 1..=3 {
            assert_eq!(field[j], lat.value(j - 1, 2));
        }
        assert_eq!(field[4], 0.0);
    }

    #[test]
    fn more_modes_than_paths_rejected() {
        let lat = WienerLattice::sample(2, 1.0, 0.5, 10).unwrap();
        let basis = KlBasis::new(KlKind::BrownianSheetMin, 3).unwrap();
        assert!(sample_q_wiener(&basis, &lat, &[0.5], 1.0).is_err());
    }

    #[test]
    fn field_variance_matches_truncated_covariance() {
        // Var[W^c(t, x)] = t Σ_j λ_j φ_j(x)^2 for the truncated expansion.
        let t = 1.0;
        let x = 0.7;
        let modes = 4;
        let basis = KlBasis::new(KlKind::BrownianSheetMin, modes).unwrap();
        let n = 10_000usize;
        let mut sum_sq = 0.0;
        for trial in 0..n {
            let lat = WienerLattice::sample(modes, t, 0.25, 0x9A17 ^ trial as u64).unwrap();
            let v = sample_q_wiener(&basis, &lat, &[x], t).unwrap()[0];
            sum_sq += v * v;
        }
        let var = sum_sq / n as f64;
        let want: f64 = (1..=modes)
            .map(|j| {
                t * sheet_min_eigenvalue(j) * sheet_min_eigenfunction(j, x).powi(2)
            })
            .sum();
        assert!(
            (var - want).abs() < 0.05 * want,
            "variance {var} vs {want}"
        );
    }
}
