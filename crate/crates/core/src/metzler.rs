//! Metzler matrices: validation, irreducibility, flux-growth decomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::TAU_ZERO;

/// Square real matrix with nonnegative off-diagonal entries.
///
/// Generates positivity-preserving dynamics `x' = A x`: if `x(0)` is
/// entrywise positive then so is `x(t)` for all `t > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetzlerMatrix {
    entries: DMatrix<f64>,
}

impl MetzlerMatrix {
    /// Validates and wraps `m`. Off-diagonal entries in `(-TAU_ZERO, 0)`
    /// are clamped to zero; anything more negative is rejected.
    pub fn new(mut m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::Validation("matrix dimension must be at least 1".into()));
        }
        for j in 0..cols {
            for i in 0..rows {
                let e = m[(i, j)];
                if !e.is_finite() {
                    return Err(Error::NotFinite { row: i + 1, col: j + 1 });
                }
                if i != j && e < 0.0 {
                    if e < -TAU_ZERO {
                        return Err(Error::NotMetzler { row: i + 1, col: j + 1, value: e });
                    }
                    m[(i, j)] = 0.0;
                }
            }
        }
        Ok(Self { entries: m })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        inf_norm(&self.entries)
    }

    /// True iff the directed graph with an edge `j -> i` whenever
    /// `A[i][j] > 0` (`i != j`) is strongly connected. Equivalent to
    /// positivity of all entries of `(rI + A)^k` for suitable `r`, `k`,
    /// without having to pick either constant.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        if n == 1 {
            return true;
        }
        // Strong connectivity is preserved under edge reversal, so one
        // forward and one backward reachability sweep from node 0 suffice.
        let edge = |from: usize, to: usize| self.entries[(to, from)] > 0.0;
        reaches_all(n, |a, b| edge(a, b)) && reaches_all(n, |a, b| edge(b, a))
    }
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if !seen[w] && edge(v, w) {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..m.nrows() {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            s += m[(i, j)].abs();
        }
        best = best.max(s);
    }
    best
}

/// Validates `m` as a Metzler matrix.
pub fn validate_metzler(m: DMatrix<f64>) -> Result<MetzlerMatrix> {
    MetzlerMatrix::new(m)
}

/// A Metzler matrix split into inter-compartment fluxes and net
/// per-compartment growth rates.
///
/// `fluxes[(i, j)]` is the flow from compartment `j` into compartment `i`
/// (zero diagonal); `growth[i]` is the net growth rate of compartment `i`.
/// The source matrix is recovered as off-diagonal = fluxes and
/// `diag[i] = growth[i] - sum_j fluxes[(j, i)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxDecomposition {
    pub fluxes: DMatrix<f64>,
    pub growth: DVector<f64>,
}

/// Splits `a` into fluxes (its off-diagonal part) and growth rates
/// `growth[i] = a[(i, i)] + sum_{j != i} a[(j, i)]` (column off-diagonal
/// sums, so that recomposition reproduces the diagonal).
pub fn flux_decompose(a: &MetzlerMatrix) -> FluxDecomposition {
    let m = a.entries();
    let n = a.n();
    let mut fluxes = m.clone();
    let mut growth = DVector::zeros(n);
    for i in 0..n {
        fluxes[(i, i)] = 0.0;
        growth[i] = m[(i, i)] + column_offdiag_sum(m, i);
    }
    FluxDecomposition { fluxes, growth }
}

/// Inverse of [`flux_decompose`].
pub fn flux_compose(f: &FluxDecomposition) -> Result<MetzlerMatrix> {
    let n = f.fluxes.nrows();
    if f.fluxes.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: f.fluxes.ncols() });
    }
    if f.growth.len() != n {
        return Err(Error::Validation(format!(
            "growth vector length {} does not match flux dimension {}",
            f.growth.len(),
            n
        )));
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && f.fluxes[(i, j)] < 0.0 {
                return Err(Error::NegativeFlux { row: i + 1, col: j + 1, value: f.fluxes[(i, j)] });
            }
        }
    }
    let mut m = f.fluxes.clone();
    for i in 0..n {
        // Same summation order as flux_decompose, so the round trip only
        // sees the rounding of a single add-subtract pair per entry.
        m[(i, i)] = f.growth[i] - column_offdiag_sum(&f.fluxes, i);
    }
    MetzlerMatrix::new(m)
}

fn column_offdiag_sum(m: &DMatrix<f64>, i: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..m.nrows() {
        if j != i {
            s += m[(j, i)];
        }
    }
    s
}
