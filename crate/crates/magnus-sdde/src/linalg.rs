//! Dense square-matrix helpers: Lie brackets and a scaling-and-squaring
//! matrix exponential.
//!
//! The exponential follows Higham's method: pick a diagonal Padé order from
//! the 1-norm of the input, scale by a power of two when the norm is large,
//! evaluate the rational approximant with one LU solve, and square back.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub type Matrix = DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Maximum column sum of absolute values.
pub fn one_norm(a: &Matrix) -> f64 {
    let mut best = 0.0f64;
    for c in 0..a.ncols() {
        let s: f64 = a.column(c).iter().map(|x| x.abs()).sum();
        best = best.max(s);
    }
    best
}

pub fn is_finite_matrix(a: &Matrix) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Commutator `[A, B] = AB - BA`.
pub fn lie_bracket(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
        return Err(Error::InvalidArgument(format!(
            "lie_bracket needs equal square matrices, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b - b * a)
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(A)` for a square matrix with finite entries.
pub fn mat_exp(a: &Matrix) -> Result<Matrix> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "mat_exp needs a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite_matrix(a) {
        return Err(Error::InvalidArgument(
            "mat_exp: input has non-finite entries".into(),
        ));
    }
    let d = a.nrows();
    let norm = one_norm(a);
    if norm == 0.0 {
        return Ok(Matrix::identity(d, d));
    }

    let ((u, v), squarings) = if norm <= THETA_9 {
        let a2 = a * a;
        if norm <= THETA_3 {
            (pade_uv(a, &[&a2], &B3), 0)
        } else if norm <= THETA_5 {
            let a4 = &a2 * &a2;
            (pade_uv(a, &[&a2, &a4], &B5), 0)
        } else if norm <= THETA_7 {
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            (pade_uv(a, &[&a2, &a4, &a6], &B7), 0)
        } else {
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let a8 = &a6 * &a2;
            (pade_uv(a, &[&a2, &a4, &a6, &a8], &B9), 0)
        }
    } else {
        let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
        let scaled = a * 2f64.powi(-(s as i32));
        let a2 = &scaled * &scaled;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        (pade13_uv(&scaled, &a2, &a4, &a6), s)
    };

    // r = (V - U)^{-1} (V + U)
    let numer = &v + &u;
    let denom = v - u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::InvalidArgument("mat_exp: Pade denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// U and V sums for orders 3, 5, 7, 9. `even_powers` holds A^2, A^4, ...
fn pade_uv(a: &Matrix, even_powers: &[&Matrix], b: &[f64]) -> (Matrix, Matrix) {
    let d = a.nrows();
    let eye = Matrix::identity(d, d);
    let mut u_inner = &eye * b[1];
    let mut v = &eye * b[0];
    for (k, p) in even_powers.iter().enumerate() {
        u_inner += *p * b[2 * k + 3];
        v += *p * b[2 * k + 2];
    }
    (a * u_inner, v)
}

fn pade13_uv(a: &Matrix, a2: &Matrix, a4: &Matrix, a6: &Matrix) -> (Matrix, Matrix) {
    let d = a.nrows();
    let eye = Matrix::identity(d, d);
    let u_high = a6 * (a6 * B13[13] + a4 * B13[11] + a2 * B13[9]);
    let u_low = a6 * B13[7] + a4 * B13[5] + a2 * B13[3] + &eye * B13[1];
    let v_high = a6 * (a6 * B13[12] + a4 * B13[10] + a2 * B13[8]);
    let v = v_high + a6 * B13[6] + a4 * B13[4] + a2 * B13[2] + &eye * B13[0];
    (a * (u_high + u_low), v)
}
