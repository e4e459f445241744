//! Dense matrix exponential by scaling and squaring with a [13/13] Pade
//! kernel.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metzler::inf_norm;

/// Largest inf-norm the Pade-13 kernel handles without scaling.
const THETA_13: f64 = 5.371920351148152;

/// Pade-13 numerator coefficients, constant term first.
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Computes `exp(A t)` for a square real matrix and `t >= 0`.
///
/// `A t` is scaled down by a power of two until its inf-norm is below the
/// Pade-13 threshold, the rational kernel is applied, and the result is
/// squared back up. Relative accuracy is at the 1e-9 level or better for
/// `||A t|| <= 1e3`.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    if !(t >= 0.0) {
        return Err(Error::Validation(format!("time must be nonnegative, got {t}")));
    }
    let at = a * t;
    let norm = inf_norm(&at);
    if !norm.is_finite() {
        return Err(Error::Validation("matrix entries are not finite".into()));
    }

    let squarings = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as u32 } else { 0 };
    let scaled = &at / 2f64.powi(squarings as i32);

    let mut result = pade13(&scaled)?;
    for _ in 0..squarings {
        result = &result * &result;
        if result.iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow { log_scale: norm });
        }
    }
    Ok(result)
}

fn pade13(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u = a * (&a6 * (&a6 * B13[13] + &a4 * B13[11] + &a2 * B13[9])
        + &a6 * B13[7]
        + &a4 * B13[5]
        + &a2 * B13[3]
        + &id * B13[1]);
    let v = &a6 * (&a6 * B13[12] + &a4 * B13[10] + &a2 * B13[8])
        + &a6 * B13[6]
        + &a4 * B13[4]
        + &a2 * B13[2]
        + &id * B13[0];

    let denom = &v - &u;
    let numer = &v + &u;
    denom
        .full_piv_lu()
        .solve(&numer)
        .ok_or_else(|| Error::Validation("singular Pade denominator".into()))
}
