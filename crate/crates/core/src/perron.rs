//! Perron-Frobenius eigen-analysis of irreducible Metzler matrices.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metzler::{inf_norm, MetzlerMatrix};
use crate::TAU_EIG;

/// When the spectral gap falls below `GAP_FLOOR * ||A||`, power iteration
/// is skipped in favor of shift-and-invert on the dense eigenvalue.
const GAP_FLOOR: f64 = 1e-6;

/// Dominant eigen-structure of an irreducible Metzler matrix.
#[derive(Clone, Debug)]
pub struct PerronData {
    /// Frobenius eigenvalue: real, simple, strictly dominant.
    pub lambda_f: f64,
    /// Right eigenvector, entrywise positive, normalized to unit 1-norm.
    pub v_f: DVector<f64>,
    /// Left eigenvector (as a column), entrywise positive, scaled so
    /// `w_f . v_f = 1`.
    pub w_f: DVector<f64>,
    /// Perron projection `P = v_f w_f^T`; rank one, `P^2 = P`,
    /// `A P = P A = lambda_f P`.
    pub projection: DMatrix<f64>,
    /// `lambda_f` minus the largest real part among the other eigenvalues.
    /// Infinite for 1x1 matrices.
    pub gap: f64,
}

/// Largest real part over the full spectrum. Defined for any square
/// matrix, reducible or not; used as advisory data when the Perron
/// machinery refuses a reducible input.
pub fn dominant_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `lambda_f` minus the max real part of the non-Perron eigenvalues.
pub fn spectral_gap(a: &MetzlerMatrix) -> Result<f64> {
    if !a.is_irreducible() {
        return Err(Error::Reducible { dominant: Some(dominant_eigenvalue(a.entries())) });
    }
    let (_, gap) = perron_and_gap(&a.entries().complex_eigenvalues().as_slice().to_vec());
    Ok(gap)
}

fn perron_and_gap(eigs: &[Complex<f64>]) -> (f64, f64) {
    let perron_idx = eigs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    let lambda_f = eigs[perron_idx].re;
    let next = eigs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != perron_idx)
        .map(|(_, e)| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = if next.is_finite() { lambda_f - next } else { f64::INFINITY };
    (lambda_f, gap)
}

/// Computes the Perron eigenvalue, positive left/right eigenvectors, the
/// Perron projection, and the spectral gap of an irreducible Metzler
/// matrix.
///
/// The matrix is shifted by `r = max(0, -min diag) + 1` so the shifted
/// matrix is nonnegative with positive diagonal (hence primitive), and
/// power iteration runs on it and on its transpose. The spectral gap (and
/// the fallback eigenvalue for near-defective dominant pairs) comes from
/// the dense full spectrum.
pub fn perron_eigenpair(a: &MetzlerMatrix) -> Result<PerronData> {
    let m = a.entries();
    let n = a.n();
    if !a.is_irreducible() {
        return Err(Error::Reducible { dominant: Some(dominant_eigenvalue(m)) });
    }

    let eigs = m.complex_eigenvalues().as_slice().to_vec();
    let (lambda_dense, gap) = perron_and_gap(&eigs);
    let norm = a.inf_norm();

    let min_diag = (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min);
    let r = (-min_diag).max(0.0) + 1.0;
    let shifted = m + DMatrix::identity(n, n) * r;

    // Power iteration on the shifted matrix converges at the ratio of
    // eigenvalue moduli of A + rI, which can be far tighter than the
    // real-part gap of A; budget and fallback go by the modulus gap.
    let lambda_shifted = lambda_dense + r;
    let next_modulus = eigs
        .iter()
        .map(|e| Complex::new(e.re + r, e.im).norm())
        .filter(|&v| v < lambda_shifted * (1.0 - 1e-14))
        .fold(0.0_f64, f64::max);
    let modulus_gap = lambda_shifted - next_modulus;

    let stall = (gap.is_finite() && gap < GAP_FLOOR * norm.max(1.0))
        || modulus_gap < GAP_FLOOR * lambda_shifted;
    let (mut v, mut w) = if stall {
        // Near-defective dominant pair: power iteration would stall, so go
        // straight to shift-and-invert around the dense eigenvalue.
        let v = inverse_iteration(m, lambda_dense, None)?;
        let w = inverse_iteration(&m.transpose(), lambda_dense, None)?;
        (v, w)
    } else {
        let budget = iteration_budget(n, lambda_shifted, modulus_gap);
        let v = power_iteration(&shifted, budget)?;
        let w = power_iteration(&shifted.transpose(), budget)?;
        (v, w)
    };

    // One shift-and-invert polish pass on each side tightens the residual
    // to the dense-solver level.
    let lambda_est = rayleigh(m, &w, &v);
    v = inverse_iteration(m, lambda_est, Some(v))?;
    w = inverse_iteration(&m.transpose(), lambda_est, Some(w))?;

    let v_sum: f64 = v.iter().sum();
    v /= v_sum;
    let lambda_f = rayleigh(m, &w, &v);
    let wv = w.dot(&v);
    w /= wv;

    if v.iter().any(|&x| x <= 0.0) || w.iter().any(|&x| x <= 0.0) {
        return Err(Error::NoConvergence { iterations: iteration_budget(n, norm, gap) });
    }

    let projection = &v * w.transpose();
    Ok(PerronData { lambda_f, v_f: v, w_f: w, projection, gap })
}

fn rayleigh(m: &DMatrix<f64>, w: &DVector<f64>, v: &DVector<f64>) -> f64 {
    w.dot(&(m * v)) / w.dot(v)
}

fn iteration_budget(n: usize, norm: f64, gap: f64) -> usize {
    let scale = norm.max(1.0);
    let ratio = if gap.is_finite() && gap > 0.0 { (scale / gap).ceil() } else { 1.0 };
    ((100.0 * n as f64 * ratio) as usize).clamp(100 * n, 2_000_000)
}

/// Power iteration on a nonnegative primitive matrix. The iterate stays
/// entrywise positive and is renormalized to unit 1-norm each step, so the
/// eigenvalue estimate is just the 1-norm of the next iterate.
fn power_iteration(b: &DMatrix<f64>, budget: usize) -> Result<DVector<f64>> {
    let n = b.nrows();
    let bnorm = inf_norm(b).max(1.0);
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..budget {
        let bv = b * &v;
        let lambda: f64 = bv.iter().sum();
        let residual = (&bv - &v * lambda).amax();
        v = &bv / lambda;
        if residual <= TAU_EIG * bnorm {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence { iterations: budget })
}

/// One-or-few-step inverse iteration with a shift just off the target
/// eigenvalue. Converges in a step or two because the Perron eigenvalue is
/// simple and the shift sits within the gap.
fn inverse_iteration(m: &DMatrix<f64>, lambda: f64, start: Option<DVector<f64>>) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut v = start.unwrap_or_else(|| DVector::from_element(n, 1.0 / n as f64));
    let mut delta = 1e-10 * (1.0 + lambda.abs());
    let mut steps = 0;
    while steps < 3 {
        let shifted = m - DMatrix::identity(n, n) * (lambda + delta);
        match shifted.full_piv_lu().solve(&v) {
            Some(z) if z.amax().is_finite() && z.amax() > 0.0 => {
                v = &z / z.amax();
                // Keep the dominant sign convention positive.
                if v.iter().sum::<f64>() < 0.0 {
                    v = -v;
                }
                steps += 1;
            }
            _ => {
                // Singular to working precision: back the shift off.
                delta *= 10.0;
                if delta > 1.0 {
                    return Err(Error::NoConvergence { iterations: steps });
                }
            }
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate_metzler;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn symmetric_two_cycle() {
        let a = validate_metzler(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let p = perron_eigenpair(&a).unwrap();
        assert_abs_diff_eq!(p.lambda_f, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_f[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_f[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.gap, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_two_cycle() {
        let a = validate_metzler(dmatrix![-1.0, 2.0; 2.0, -1.0]).unwrap();
        let p = perron_eigenpair(&a).unwrap();
        assert_abs_diff_eq!(p.lambda_f, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_f[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn projection_invariants() {
        let a = validate_metzler(dmatrix![-1.0, 2.0, 0.5; 0.3, -2.0, 1.0; 0.7, 0.1, -0.5]).unwrap();
        let p = perron_eigenpair(&a).unwrap();
        let pp = &p.projection * &p.projection;
        assert!((pp - &p.projection).amax() < 1e-9);
        let ap = a.entries() * &p.projection;
        assert!((ap - &p.projection * p.lambda_f).amax() < 1e-9);
        assert!(p.projection.iter().all(|&x| x > 0.0));
        assert!(p.gap > 0.0);
    }

    #[test]
    fn refuses_reducible() {
        let a = validate_metzler(dmatrix![-1.0, 0.0; 1.0, -2.0]).unwrap();
        match perron_eigenpair(&a) {
            Err(Error::Reducible { dominant: Some(d) }) => assert_abs_diff_eq!(d, -1.0, epsilon = 1e-12),
            other => panic!("expected Reducible, got {other:?}"),
        }
    }

    #[test]
    fn gap_examples() {
        let a = validate_metzler(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(spectral_gap(&a).unwrap(), 2.0, epsilon = 1e-12);

        let s = 10.0;
        let b = validate_metzler(dmatrix![-s, s; s, -s]).unwrap();
        assert_abs_diff_eq!(spectral_gap(&b).unwrap(), 2.0 * s, epsilon = 1e-9);
    }

    #[test]
    fn one_by_one_has_infinite_gap() {
        let a = validate_metzler(dmatrix![5.0]).unwrap();
        let p = perron_eigenpair(&a).unwrap();
        assert_abs_diff_eq!(p.lambda_f, 5.0, epsilon = 1e-12);
        assert!(p.gap.is_infinite());
        assert_eq!(p.v_f[0], 1.0);
    }
}
