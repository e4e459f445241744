#![allow(dead_code)]

//! Shared fixtures for the integration suites: seeded random model
//! generators and independent numerical oracles (long Taylor series for
//! the exponential, matrix-power irreducibility, RK4 integration).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lograte::MetzlerMatrix;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|x| x.abs()).sum()).fold(0.0, f64::max)
}

pub fn rel_inf_err(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    inf_norm(&(got - want)) / inf_norm(want).max(1.0)
}

/// Random Metzler draw with off-diagonals in `[0, offdiag_hi]` and
/// diagonals in `[diag_lo, diag_hi]`. Continuous off-diagonals are almost
/// surely all positive, so the result is irreducible.
pub fn random_metzler(rng: &mut ChaCha8Rng, n: usize, offdiag_hi: f64, diag_lo: f64, diag_hi: f64) -> MetzlerMatrix {
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            rng.random_range(diag_lo..diag_hi)
        } else {
            rng.random_range(0.0..offdiag_hi)
        }
    });
    MetzlerMatrix::new(m).expect("draw is Metzler by construction")
}

pub fn random_positive_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(0.1..2.0))
}

/// General (not Metzler) random matrix for exponential accuracy tests.
pub fn random_general(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale))
}

/// Independent exponential oracle: scale `A t` down to infinity-norm
/// <= 0.5, sum 60 Taylor terms with Kahan compensation, square back up.
/// Entirely series-based, sharing nothing with the Pade kernel under test.
pub fn taylor_expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let at = a * t;
    let norm = inf_norm(&at);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = &at / 2.0_f64.powi(squarings);

    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for k in 1..=60u32 {
        term = &term * &b / f64::from(k);
        for i in 0..n {
            for j in 0..n {
                let y = term[(i, j)] - comp[(i, j)];
                let s = sum[(i, j)] + y;
                comp[(i, j)] = (s - sum[(i, j)]) - y;
                sum[(i, j)] = s;
            }
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// The irreducibility condition as written: all entries of `(rI + A)^n`
/// strictly positive with `r = max(0, -min diagonal) + 1`.
pub fn matrix_power_irreducible(a: &MetzlerMatrix) -> bool {
    let n = a.n();
    let m = a.entries();
    let min_diag = (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min);
    let r = (-min_diag).max(0.0) + 1.0;
    let base = m + DMatrix::identity(n, n) * r;
    let mut pow = DMatrix::<f64>::identity(n, n);
    for _ in 0..n {
        pow = &pow * &base;
    }
    pow.iter().all(|&e| e > 0.0)
}

/// Fixed-step classical Runge-Kutta on `x' = A x`; cross-check for the
/// exact exponential propagator.
pub fn rk4(a: &DMatrix<f64>, x0: &DVector<f64>, t: f64, steps: usize) -> DVector<f64> {
    let h = t / steps as f64;
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = a * &x;
        let k2 = a * (&x + &k1 * (h / 2.0));
        let k3 = a * (&x + &k2 * (h / 2.0));
        let k4 = a * (&x + &k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

use lograte::{DoseFamily, FamilyVariant, SystemModel};

/// Two-type exchange model wrapped as a system with unit output weights.
pub fn dip_model(a: f64, b: f64, d: f64, k: f64, domain: (f64, f64)) -> SystemModel {
    let family = DoseFamily::new(FamilyVariant::Dip { a, b, d, k }, domain).unwrap();
    SystemModel::new(family, DVector::from_element(2, 1.0), DVector::from_element(2, 1.0)).unwrap()
}

/// Fixed matrix viewed as the trivial affine family `A(u) = A`, so the
/// protocol machinery can drive it at any dose.
pub fn constant_model(a: &MetzlerMatrix, c: DVector<f64>, x0: DVector<f64>) -> SystemModel {
    let n = a.n();
    let family = DoseFamily::new(
        FamilyVariant::Affine { a0: a.entries().clone(), a1: DMatrix::zeros(n, n) },
        (0.0, 1.0),
    )
    .unwrap();
    SystemModel::new(family, c, x0).unwrap()
}
