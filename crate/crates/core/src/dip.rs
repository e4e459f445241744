//! Closed-form analysis of the two-type exchange model
//! `A(u) = [[b - a u, a k], [a u, d - a k]]`.
//!
//! The drug-induced proliferation (DIP) rate `(b k + d u) / (k + u)` is the
//! fast-exchange limit of the dominant eigenvalue as the exchange scale `a`
//! grows; the machinery here evaluates both sides of that limit without
//! catastrophic cancellation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Trace/determinant data of the two-type matrix, with the substitution
/// that exposes the fast-exchange limit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DipClosedForm {
    /// Trace `b + d - a (k + u)`.
    pub trace: f64,
    /// Determinant `b d - a (b k + d u)`.
    pub det: f64,
    /// `x = a (k + u) - (b + d) = -trace`.
    pub x: f64,
    /// `p = -4 (b k + d u) / (k + u)`.
    pub p: f64,
    /// `q = 4 (k b^2 + u d^2) / (k + u)`.
    pub q: f64,
    /// Dominant eigenvalue `(trace + sqrt(trace^2 - 4 det)) / 2`.
    pub lambda_max: f64,
}

/// Drug-induced proliferation rate `(b k + d u) / (k + u)`.
pub fn dip_rate(b: f64, d: f64, k: f64, u: f64) -> f64 {
    (b * k + d * u) / (k + u)
}

/// Evaluates the characteristic-polynomial data and the dominant
/// eigenvalue of the two-type matrix at dose `u`.
///
/// The dominant root takes the `+` branch of the quadratic formula; when
/// the trace is negative and large, the smaller root is computed first and
/// the larger recovered through the product of roots, so no cancellation
/// occurs. A negative discriminant beyond rounding slack means the
/// parameters do not describe a Metzler two-type matrix.
pub fn closed_form_eigenvalue(a: f64, b: f64, d: f64, k: f64, u: f64) -> Result<DipClosedForm> {
    if !(a > 0.0) || !(k > 0.0) {
        return Err(Error::Validation(format!("parameters a = {a} and k = {k} must be positive")));
    }
    if !(u >= 0.0) {
        return Err(Error::Validation(format!("dose u = {u} must be nonnegative")));
    }
    let trace = b + d - a * (k + u);
    let det = b * d - a * (b * k + d * u);
    let x = a * (k + u) - (b + d);
    let p = -4.0 * (b * k + d * u) / (k + u);
    let q = 4.0 * (k * b * b + u * d * d) / (k + u);

    let disc = trace * trace - 4.0 * det;
    let slack = 1e-12 * (trace * trace + 4.0 * det.abs() + 1.0);
    if disc < -slack {
        return Err(Error::ComplexRoots { discriminant: disc });
    }
    let s = disc.max(0.0).sqrt();
    let lambda_max = if trace > 0.0 {
        (trace + s) / 2.0
    } else {
        let denom = trace - s;
        if denom == 0.0 {
            (trace + s) / 2.0
        } else {
            2.0 * det / denom
        }
    };

    Ok(DipClosedForm { trace, det, x, p, q, lambda_max })
}

/// `|lambda_max(a) - rho_DIP|`: the distance still to go toward the
/// fast-exchange limit. First order in `1/a`.
pub fn dip_limit_error(a: f64, b: f64, d: f64, k: f64, u: f64) -> Result<f64> {
    let cf = closed_form_eigenvalue(a, b, d, k, u)?;
    Ok((cf.lambda_max - dip_rate(b, d, k, u)).abs())
}

/// One evaluation of `-x + sqrt(x^2 - p x + q)` on its way to the limit
/// `-p/2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugateSample {
    pub x: f64,
    pub value: f64,
    pub error_to_limit: f64,
}

/// Evaluates `-x + sqrt(x^2 - p x + q)` at each of `x_values` through the
/// conjugate form `(p x - q) / (-x - sqrt(x^2 - p x + q))`, which stays
/// accurate where the naive difference of near-equal terms loses all
/// digits. The error against the limit `-p/2` decreases in `x`.
pub fn conjugate_limit_check(p: f64, q: f64, x_values: &[f64]) -> Result<Vec<ConjugateSample>> {
    if !(p > 0.0) || !(q > 0.0) {
        return Err(Error::Validation(format!("p = {p} and q = {q} must be positive")));
    }
    let mut out = Vec::with_capacity(x_values.len());
    for &x in x_values {
        let disc = x * x - p * x + q;
        if disc <= 0.0 {
            return Err(Error::NegativeDiscriminant { x });
        }
        let value = (p * x - q) / (-x - disc.sqrt());
        out.push(ConjugateSample { x, value, error_to_limit: (value + p / 2.0).abs() });
    }
    Ok(out)
}

/// Naive evaluation of the same expression; kept for the cancellation
/// comparison in tests and reports.
pub fn conjugate_limit_naive(p: f64, q: f64, x: f64) -> f64 {
    -x + (x * x - p * x + q).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dip_rate_examples() {
        assert_abs_diff_eq!(dip_rate(0.8, -0.3, 2.0, 0.0), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(dip_rate(1.0, -1.0, 1.0, 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dip_rate(0.06, -0.03, 2.0, 2.0), 0.015, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_at_unit_parameters() {
        let cf = closed_form_eigenvalue(1.0, 1.0, -1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(cf.lambda_max, -1.0 + 2.0_f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(cf.x, -cf.trace, epsilon = 0.0);
    }

    #[test]
    fn triangular_at_zero_dose() {
        // u = 0 makes the matrix upper triangular with eigenvalues b, d - a k.
        let (a, b, d, k) = (2.0, 1.0, -1.0, 1.5);
        let cf = closed_form_eigenvalue(a, b, d, k, 0.0).unwrap();
        assert_abs_diff_eq!(cf.lambda_max, b.max(d - a * k), epsilon = 1e-12);
        assert_abs_diff_eq!(dip_limit_error(a, b, d, k, 0.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn limit_error_shrinks_with_a() {
        let e = dip_limit_error(1e4, 1.0, -1.0, 1.0, 1.0).unwrap();
        assert!(e <= 1e-3, "error {e} too large at a = 1e4");
    }

    #[test]
    fn conjugate_limit_examples() {
        let samples = conjugate_limit_check(2.0, 1.0, &[1e6]).unwrap();
        assert_abs_diff_eq!(samples[0].value, -1.0, epsilon = 1e-5);

        let samples = conjugate_limit_check(4.0, 7.3, &[1e10]).unwrap();
        assert_abs_diff_eq!(samples[0].value, -2.0, epsilon = 1e-6);
    }

    #[test]
    fn conjugate_form_beats_naive_at_large_x() {
        // The naive difference only degrades when x - p/2 falls off the
        // floating grid at x's exponent; p/2 = 0.35 is not a multiple of
        // ulp(1e12), so sqrt snaps to the wrong grid point by ~1e-5.
        let (p, q, x) = (0.7, 1.3, 1e12);
        let naive = conjugate_limit_naive(p, q, x);
        let stable = conjugate_limit_check(p, q, &[x]).unwrap()[0].value;
        assert!((naive - stable).abs() > 1e-6, "naive form unexpectedly accurate");
        assert!((stable + p / 2.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(closed_form_eigenvalue(-1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(conjugate_limit_check(-2.0, 1.0, &[10.0]).is_err());
        assert!(matches!(
            conjugate_limit_check(8.0, 1.0, &[4.0]),
            Err(Error::NegativeDiscriminant { .. })
        ));
    }
}
