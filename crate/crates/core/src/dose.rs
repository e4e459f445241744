//! Parameterized Metzler families `A(u)` and the JSON model format.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metzler::MetzlerMatrix;
use crate::TAU_ZERO;

/// How the dynamics matrix depends on the scalar dose `u`.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyVariant {
    /// `A(u) = A0 + u A1`.
    Affine { a0: DMatrix<f64>, a1: DMatrix<f64> },
    /// Two-type exchange model
    /// `A(u) = [[b - a u, a k], [a u, d - a k]]`:
    /// type 1 converts to type 2 at rate `a u`, back-converts at rate
    /// `a k`, with dose-independent growth rates `b` and `d`.
    Dip { a: f64, b: f64, d: f64, k: f64 },
    /// Entrywise linear interpolation between matrices tabulated at an
    /// ascending list of doses.
    Tabulated { doses: Vec<f64>, matrices: Vec<DMatrix<f64>> },
}

/// A dose-parameterized family of Metzler matrices on a closed dose
/// interval.
#[derive(Clone, Debug, PartialEq)]
pub struct DoseFamily {
    variant: FamilyVariant,
    n: usize,
    dose_domain: (f64, f64),
}

impl DoseFamily {
    pub fn new(variant: FamilyVariant, dose_domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = dose_domain;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::Validation(format!("dose_domain [{lo}, {hi}] must be a finite closed interval")));
        }
        let n = match &variant {
            FamilyVariant::Affine { a0, a1 } => {
                let n = a0.nrows();
                if a0.ncols() != n {
                    return Err(Error::NotSquare { rows: n, cols: a0.ncols() });
                }
                if a1.shape() != (n, n) {
                    return Err(Error::Validation("A0 and A1 must have the same square shape".into()));
                }
                validate_affine_domain(a0, a1, lo, hi)?;
                n
            }
            FamilyVariant::Dip { a, k, .. } => {
                if !(*a > 0.0) {
                    return Err(Error::Validation(format!("dip parameter a must be positive, got {a}")));
                }
                if !(*k > 0.0) {
                    return Err(Error::Validation(format!("dip parameter k must be positive, got {k}")));
                }
                if lo < 0.0 {
                    return Err(Error::Validation("dip dose_domain must be nonnegative".into()));
                }
                2
            }
            FamilyVariant::Tabulated { doses, matrices } => {
                if doses.is_empty() || doses.len() != matrices.len() {
                    return Err(Error::Validation("tabulated family needs one matrix per dose".into()));
                }
                if !doses.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Validation("tabulated doses must be strictly increasing".into()));
                }
                let n = matrices[0].nrows();
                for m in matrices {
                    if m.shape() != (n, n) {
                        return Err(Error::Validation("tabulated matrices must share one square shape".into()));
                    }
                    MetzlerMatrix::new(m.clone())?;
                }
                if lo < doses[0] - TAU_ZERO || hi > doses[doses.len() - 1] + TAU_ZERO {
                    return Err(Error::Validation(format!(
                        "dose_domain [{lo}, {hi}] exceeds the tabulated hull [{}, {}]",
                        doses[0],
                        doses[doses.len() - 1]
                    )));
                }
                n
            }
        };
        Ok(Self { variant, n, dose_domain })
    }

    pub fn variant(&self) -> &FamilyVariant {
        &self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dose_domain(&self) -> (f64, f64) {
        self.dose_domain
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.dose_domain.0 && u <= self.dose_domain.1
    }

    /// Evaluates the family at dose `u`.
    pub fn matrix_at(&self, u: f64) -> Result<MetzlerMatrix> {
        if !self.contains(u) {
            return Err(Error::DoseOutOfDomain { dose: u, min: self.dose_domain.0, max: self.dose_domain.1 });
        }
        let raw = match &self.variant {
            FamilyVariant::Affine { a0, a1 } => a0 + a1 * u,
            FamilyVariant::Dip { a, b, d, k } => {
                DMatrix::from_row_slice(2, 2, &[b - a * u, a * k, a * u, d - a * k])
            }
            FamilyVariant::Tabulated { doses, matrices } => {
                // Exact endpoint hits return the tabulated matrix as is.
                if let Some(i) = doses.iter().position(|&d| d == u) {
                    matrices[i].clone()
                } else {
                    let hi = doses.partition_point(|&d| d < u).min(doses.len() - 1);
                    let lo = hi - 1;
                    let theta = (u - doses[lo]) / (doses[hi] - doses[lo]);
                    &matrices[lo] * (1.0 - theta) + &matrices[hi] * theta
                }
            }
        };
        MetzlerMatrix::new(raw).map_err(|e| match e {
            Error::NotMetzler { row, col, value } => Error::NotMetzlerAtDose { dose: u, row, col, value },
            other => other,
        })
    }
}

/// The affine off-diagonals are linear in `u`, so nonnegativity on the
/// whole interval reduces to the two endpoints. On failure, report the
/// induced feasible dose interval so the model can be fixed at load time.
fn validate_affine_domain(a0: &DMatrix<f64>, a1: &DMatrix<f64>, lo: f64, hi: f64) -> Result<()> {
    let n = a0.nrows();
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue;
            }
            let (p0, p1) = (a0[(i, j)], a1[(i, j)]);
            if !p0.is_finite() || !p1.is_finite() {
                return Err(Error::NotFinite { row: i + 1, col: j + 1 });
            }
            for u in [lo, hi] {
                if p0 + u * p1 < -TAU_ZERO {
                    let remedy = if p1 == 0.0 {
                        "no dose can restore it".to_string()
                    } else {
                        format!(
                            "feasible doses require u {} {}",
                            if p1 < 0.0 { "<=" } else { ">=" },
                            -p0 / p1
                        )
                    };
                    return Err(Error::Validation(format!(
                        "affine family leaves the Metzler cone at dose {u}: entry ({},{}) = {}; {remedy}",
                        i + 1,
                        j + 1,
                        p0 + u * p1,
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A dose family together with the output weights and initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    pub family: DoseFamily,
    /// Output row vector, entrywise positive: `y = c x`.
    pub c: DVector<f64>,
    /// Initial state, entrywise positive.
    pub x0: DVector<f64>,
}

impl SystemModel {
    pub fn new(family: DoseFamily, c: DVector<f64>, x0: DVector<f64>) -> Result<Self> {
        let n = family.n();
        if c.len() != n {
            return Err(Error::Validation(format!("c has length {}, expected {n}", c.len())));
        }
        if x0.len() != n {
            return Err(Error::Validation(format!("x0 has length {}, expected {n}", x0.len())));
        }
        if !c.iter().all(|&x| x.is_finite() && x > 0.0) {
            return Err(Error::Validation("c must be entrywise positive".into()));
        }
        if !x0.iter().all(|&x| x.is_finite() && x > 0.0) {
            return Err(Error::Validation("x0 must be entrywise positive".into()));
        }
        Ok(Self { family, c, x0 })
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    pub fn matrix_at(&self, u: f64) -> Result<MetzlerMatrix> {
        self.family.matrix_at(u)
    }

    /// Output `y = c x`.
    pub fn output(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawModel {
    n: usize,
    family: RawFamily,
    c: Vec<f64>,
    x0: Vec<f64>,
    dose_domain: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawFamily {
    Affine { #[serde(rename = "A0")] a0: Vec<Vec<f64>>, #[serde(rename = "A1")] a1: Vec<Vec<f64>> },
    Dip { a: f64, b: f64, d: f64, k: f64 },
    Tabulated { doses: Vec<f64>, matrices: Vec<Vec<Vec<f64>>> },
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Validation(format!("{name} must be an {n}x{n} matrix of rows")));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Parses and fully validates a UTF-8 JSON model file.
pub fn load_model(text: &str) -> Result<SystemModel> {
    let raw: RawModel = serde_json::from_str(text)?;
    let n = raw.n;
    if n == 0 {
        return Err(Error::Validation("n must be at least 1".into()));
    }
    let variant = match raw.family {
        RawFamily::Affine { a0, a1 } => FamilyVariant::Affine {
            a0: rows_to_matrix(&a0, n, "A0")?,
            a1: rows_to_matrix(&a1, n, "A1")?,
        },
        RawFamily::Dip { a, b, d, k } => {
            if n != 2 {
                return Err(Error::Validation(format!("dip family requires n = 2, got n = {n}")));
            }
            FamilyVariant::Dip { a, b, d, k }
        }
        RawFamily::Tabulated { doses, matrices } => FamilyVariant::Tabulated {
            doses,
            matrices: matrices
                .iter()
                .map(|m| rows_to_matrix(m, n, "tabulated matrix"))
                .collect::<Result<Vec<_>>>()?,
        },
    };
    let family = DoseFamily::new(variant, (raw.dose_domain[0], raw.dose_domain[1]))?;
    SystemModel::new(family, DVector::from_vec(raw.c), DVector::from_vec(raw.x0))
}

/// Serializes a model back to the JSON wire format.
pub fn serialize_model(model: &SystemModel) -> String {
    let family = match model.family.variant() {
        FamilyVariant::Affine { a0, a1 } => RawFamily::Affine { a0: matrix_to_rows(a0), a1: matrix_to_rows(a1) },
        FamilyVariant::Dip { a, b, d, k } => RawFamily::Dip { a: *a, b: *b, d: *d, k: *k },
        FamilyVariant::Tabulated { doses, matrices } => RawFamily::Tabulated {
            doses: doses.clone(),
            matrices: matrices.iter().map(matrix_to_rows).collect(),
        },
    };
    let raw = RawModel {
        n: model.n(),
        family,
        c: model.c.iter().copied().collect(),
        x0: model.x0.iter().copied().collect(),
        dose_domain: [model.family.dose_domain().0, model.family.dose_domain().1],
    };
    serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
}
