//! Logarithmic growth rates of positive linear systems.
//!
//! A positive linear system `x' = A(u) x`, `y = c x` with a Metzler matrix
//! `A(u)` grows asymptotically like `exp(lambda_F(u) t)`, where `lambda_F`
//! is the Perron-Frobenius eigenvalue. This crate computes that rate as a
//! function of a scalar dose `u`, classifies the dose-response curve as
//! convex or concave (antifragile for reward maximization or for cost
//! minimization), and compares pulsed against uniform dosing protocols at
//! equal total drug.
//!
//! Modules map onto the pipeline:
//! - [`metzler`]: matrix validation, irreducibility, flux-growth decomposition
//! - [`perron`]: dominant eigenpair, Perron projection, spectral gap
//! - [`expm`]: dense matrix exponential (scaling and squaring)
//! - [`dose`]: parameterized matrix families `A(u)` and the model file format
//! - [`protocol`]: piecewise-constant dose schedules and exact simulation
//! - [`rate`]: rate theorems, convexity sweeps, protocol comparison
//! - [`dip`]: closed-form two-type analysis and the fast-exchange limit

pub mod dip;
pub mod dose;
pub mod error;
pub mod expm;
pub mod metzler;
pub mod perron;
pub mod protocol;
pub mod rate;

pub use dip::{
    closed_form_eigenvalue, conjugate_limit_check, conjugate_limit_naive, dip_limit_error,
    dip_rate, ConjugateSample, DipClosedForm,
};
pub use dose::{load_model, serialize_model, DoseFamily, FamilyVariant, SystemModel};
pub use error::{Error, Result};
pub use expm::matrix_exponential;
pub use metzler::{flux_compose, flux_decompose, validate_metzler, FluxDecomposition, MetzlerMatrix};
pub use perron::{dominant_eigenvalue, perron_eigenpair, spectral_gap, PerronData};
pub use protocol::{
    estimate_log_rate, simulate, total_drug, Protocol, ProtocolLabel, Segment, Trajectory,
};
pub use rate::{
    classify_antifragility, compare_protocols, dominant_rate, dose_grid, log_rate,
    sequential_rate, sweep, AntifragilityReport, AntifragilityVerdict, ComparisonVerdict,
    Convexity, Objective, ProtocolComparison, RateProfile,
};

/// Absolute tolerance for off-diagonal sign checks; entries in
/// `(-TAU_ZERO, 0)` are treated as rounding noise and clamped to zero.
pub const TAU_ZERO: f64 = 1e-12;

/// Relative tolerance for eigen-residuals (`A v = lambda v` and friends).
pub const TAU_EIG: f64 = 1e-10;
