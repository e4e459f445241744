use thiserror::Error;

/// Crate-wide error type. Indices in messages are 1-based.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix entry ({row},{col}) is not finite")]
    NotFinite { row: usize, col: usize },

    #[error("not a Metzler matrix: off-diagonal entry ({row},{col}) = {value} is negative")]
    NotMetzler { row: usize, col: usize, value: f64 },

    #[error("matrix is reducible; the Perron-Frobenius theorem does not apply (dominant eigenvalue: {dominant:?})")]
    Reducible { dominant: Option<f64> },

    #[error("eigen-iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("negative flux entry ({row},{col}) = {value}")]
    NegativeFlux { row: usize, col: usize, value: f64 },

    #[error("dose {dose} outside dose domain [{min}, {max}]")]
    DoseOutOfDomain { dose: f64, min: f64, max: f64 },

    #[error("family is not Metzler at dose {dose}: off-diagonal entry ({row},{col}) = {value}")]
    NotMetzlerAtDose { dose: f64, row: usize, col: usize, value: f64 },

    #[error("model parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("model validation error: {0}")]
    Validation(String),

    #[error("matrix exponential overflow (log-scale estimate {log_scale:.3e}); rescale the time horizon")]
    Overflow { log_scale: f64 },

    #[error("insufficient samples in the tail window: {available} (need at least 3)")]
    InsufficientSamples { available: usize },

    #[error("nonpositive output y(t) at t = {time}")]
    NonpositiveOutput { time: f64 },

    #[error("dose grid too small: {len} points (need at least 5)")]
    GridTooSmall { len: usize },

    #[error("every grid dose yields a reducible matrix; no rate profile")]
    AllReducible,

    #[error("total drug mismatch between protocols: pulsed {pulsed} vs uniform {uniform}")]
    DrugBudgetMismatch { pulsed: f64, uniform: f64 },

    #[error("complex eigenvalue pair: discriminant {discriminant} < 0; invalid two-type parameters")]
    ComplexRoots { discriminant: f64 },

    #[error("negative discriminant at x = {x}; x is not large enough")]
    NegativeDiscriminant { x: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
