//! Rate theorems on dose families: `rho(u) = lambda_F(u)`, weighted rates
//! for sequential inputs, convexity sweeps, antifragility classification,
//! and the pulsed-versus-uniform protocol comparison.

use serde::Serialize;

use crate::dose::SystemModel;
use crate::error::{Error, Result};
use crate::perron::{dominant_eigenvalue, perron_eigenpair};
use crate::protocol::{simulate, Protocol};

/// Relative slack on second differences of the rate profile; eigenvalues
/// carry eigen-residual noise that the `1/h^2` stencil amplifies.
const TAU_CONV_REL: f64 = 1e-8;

/// Slack per period on the measured log-ratio before a protocol
/// comparison verdict is called.
const TAU_CMP_PER_PERIOD: f64 = 1e-6;

/// Logarithmic growth rate at dose `u`: the Frobenius eigenvalue of
/// `A(u)`. Independent of `x0` and `c`.
pub fn log_rate(model: &SystemModel, u: f64) -> Result<f64> {
    let a = model.matrix_at(u)?;
    Ok(perron_eigenpair(&a)?.lambda_f)
}

/// Rate at dose `u` together with an irreducibility flag. Reducible doses
/// fall back to the dominant eigenvalue of the full spectrum, flagged
/// `false` because the rate theorem does not cover them.
pub fn dominant_rate(model: &SystemModel, u: f64) -> Result<(f64, bool)> {
    let a = model.matrix_at(u)?;
    if a.is_irreducible() {
        Ok((perron_eigenpair(&a)?.lambda_f, true))
    } else {
        Ok((dominant_eigenvalue(a.entries()), false))
    }
}

/// Rate of the sequential schedule that applies `u1` for a fraction
/// `alpha` of the horizon and `u2` for the rest:
/// `alpha * lambda_F(u1) + (1 - alpha) * lambda_F(u2)`.
pub fn sequential_rate(model: &SystemModel, u1: f64, u2: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(alpha * log_rate(model, u1)? + (1.0 - alpha) * log_rate(model, u2)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Convex,
    Concave,
    Linear,
    Mixed,
}

/// Sampled rate profile `rho(u)` over a uniform dose grid.
#[derive(Clone, Debug, Serialize)]
pub struct RateProfile {
    pub doses: Vec<f64>,
    pub rates: Vec<f64>,
    /// Central second differences `(rho[i-1] - 2 rho[i] + rho[i+1]) / h^2`;
    /// entry `j` belongs to dose index `j + 1`.
    pub second_differences: Vec<f64>,
    pub classification: Convexity,
    pub irreducible_flags: Vec<bool>,
}

impl RateProfile {
    /// CSV export: `u,rho,second_diff,irreducible`. Grid endpoints have no
    /// second difference and leave the field empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,rho,second_diff,irreducible\n");
        for i in 0..self.doses.len() {
            let sd = if i >= 1 && i + 1 < self.doses.len() {
                format!("{}", self.second_differences[i - 1])
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.doses[i], self.rates[i], sd, self.irreducible_flags[i]
            ));
        }
        out
    }
}

/// Builds a uniform dose grid with `count` points over `[lo, hi]`.
pub fn dose_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 5 {
        return Err(Error::GridTooSmall { len: count });
    }
    if !(hi > lo) {
        return Err(Error::Validation(format!("grid bounds [{lo}, {hi}] must be increasing")));
    }
    let h = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| lo + h * i as f64).collect())
}

/// Samples `rho` over the grid and classifies the profile by the sign
/// pattern of its second differences. Doses whose matrix is reducible get
/// a dense-solver rate and are excluded from classification.
pub fn sweep(model: &SystemModel, grid: &[f64]) -> Result<RateProfile> {
    if grid.len() < 5 {
        return Err(Error::GridTooSmall { len: grid.len() });
    }
    let h = grid[1] - grid[0];
    if !grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs()) {
        return Err(Error::Validation("dose grid must be uniformly spaced".into()));
    }

    let mut rates = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    for &u in grid {
        let (rho, irreducible) = dominant_rate(model, u)?;
        rates.push(rho);
        flags.push(irreducible);
    }
    if flags.iter().all(|f| !f) {
        return Err(Error::AllReducible);
    }

    let second_differences: Vec<f64> = (1..grid.len() - 1)
        .map(|i| (rates[i - 1] - 2.0 * rates[i] + rates[i + 1]) / (h * h))
        .collect();

    let max_rate = rates.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let tau = TAU_CONV_REL * max_rate;
    // Only triples made of irreducible doses count toward the verdict.
    let considered: Vec<f64> = (1..grid.len() - 1)
        .filter(|&i| flags[i - 1] && flags[i] && flags[i + 1])
        .map(|i| second_differences[i - 1])
        .collect();
    let all_nonneg = considered.iter().all(|&d| d >= -tau);
    let all_nonpos = considered.iter().all(|&d| d <= tau);
    let classification = if considered.is_empty() {
        Convexity::Mixed
    } else if all_nonneg && all_nonpos {
        Convexity::Linear
    } else if all_nonneg {
        Convexity::Convex
    } else if all_nonpos {
        Convexity::Concave
    } else {
        Convexity::Mixed
    };

    Ok(RateProfile { doses: grid.to_vec(), rates, second_differences, classification, irreducible_flags: flags })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    RewardMax,
    CostMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AntifragilityVerdict {
    Antifragile,
    Fragile,
    Neutral,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct AntifragilityReport {
    pub objective: Objective,
    pub classification: Convexity,
    pub verdict: AntifragilityVerdict,
    /// Dose intervals where the second difference changes sign; empty
    /// unless the classification is mixed.
    pub sign_change_intervals: Vec<(f64, f64)>,
}

/// Maps a rate profile to an antifragility verdict for the chosen
/// objective: a convex rate rewards dose alternation when the payoff is
/// maximized, a concave rate rewards it when the cost is minimized.
pub fn classify_antifragility(profile: &RateProfile, objective: Objective) -> AntifragilityReport {
    use AntifragilityVerdict::*;
    use Convexity::*;
    let verdict = match (profile.classification, objective) {
        (Linear, _) => Neutral,
        (Convex, Objective::RewardMax) | (Concave, Objective::CostMin) => Antifragile,
        (Convex, Objective::CostMin) | (Concave, Objective::RewardMax) => Fragile,
        (Mixed, _) => Indeterminate,
    };

    let mut sign_change_intervals = Vec::new();
    if profile.classification == Convexity::Mixed {
        let max_rate = profile.rates.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let tau = TAU_CONV_REL * max_rate;
        let sd = &profile.second_differences;
        for j in 0..sd.len().saturating_sub(1) {
            if (sd[j] > tau && sd[j + 1] < -tau) || (sd[j] < -tau && sd[j + 1] > tau) {
                // Second difference j sits at dose index j + 1.
                sign_change_intervals.push((profile.doses[j + 1], profile.doses[j + 2]));
            }
        }
    }

    AntifragilityReport { objective, classification: profile.classification, verdict, sign_change_intervals }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonVerdict {
    PulsedSuperiorForGrowth,
    UniformSuperiorForGrowth,
    Equivalent,
}

/// Outcome of a pulsed-versus-uniform comparison at equal total drug.
#[derive(Clone, Debug, Serialize)]
pub struct ProtocolComparison {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub rho_u: f64,
    pub rho_v: f64,
    pub rho_w: f64,
    pub rho_bar: f64,
    pub irreducible_u: bool,
    pub irreducible_v: bool,
    pub irreducible_w: bool,
    pub horizon: u32,
    pub total_drug: f64,
    pub log_y_pulsed: f64,
    pub log_y_uniform: f64,
    pub predicted_log_ratio: f64,
    pub measured_log_ratio: f64,
    pub verdict: ComparisonVerdict,
}

/// Simulates the pulsed protocol `((u, 1/2), (v, 1/2)) x N` against the
/// uniform protocol `((w, 1)) x N` with `w = (u + v) / 2`, after checking
/// that both deliver the same total drug.
///
/// Doses whose matrix is reducible are tolerated: the rate prediction
/// falls back to the dominant eigenvalue and the corresponding
/// `irreducible_*` flag is cleared.
pub fn compare_protocols(
    model: &SystemModel,
    u: f64,
    v: f64,
    n_periods: u32,
    samples_per_segment: usize,
) -> Result<ProtocolComparison> {
    if u == v {
        return Err(Error::Validation("compare_protocols needs two distinct doses".into()));
    }
    let w = (u + v) / 2.0;
    let pulsed = Protocol::pulsed(u, v, n_periods)?;
    let uniform = Protocol::uniform(w, 1.0, n_periods)?;

    let drug_pulsed = pulsed.total_drug();
    let drug_uniform = uniform.total_drug();
    if drug_pulsed != drug_uniform {
        return Err(Error::DrugBudgetMismatch { pulsed: drug_pulsed, uniform: drug_uniform });
    }

    let (rho_u, irreducible_u) = dominant_rate(model, u)?;
    let (rho_v, irreducible_v) = dominant_rate(model, v)?;
    let (rho_w, irreducible_w) = dominant_rate(model, w)?;
    let rho_bar = (rho_u + rho_v) / 2.0;

    let traj_pulsed = simulate(model, &pulsed, samples_per_segment)?;
    let traj_uniform = simulate(model, &uniform, samples_per_segment)?;
    let log_y_pulsed = traj_pulsed.final_log_output();
    let log_y_uniform = traj_uniform.final_log_output();

    let measured_log_ratio = log_y_pulsed - log_y_uniform;
    let predicted_log_ratio = n_periods as f64 * (rho_bar - rho_w);

    let tau = TAU_CMP_PER_PERIOD * n_periods as f64;
    let verdict = if measured_log_ratio > tau {
        ComparisonVerdict::PulsedSuperiorForGrowth
    } else if measured_log_ratio < -tau {
        ComparisonVerdict::UniformSuperiorForGrowth
    } else {
        ComparisonVerdict::Equivalent
    };

    Ok(ProtocolComparison {
        u,
        v,
        w,
        rho_u,
        rho_v,
        rho_w,
        rho_bar,
        irreducible_u,
        irreducible_v,
        irreducible_w,
        horizon: n_periods,
        total_drug: drug_pulsed,
        log_y_pulsed,
        log_y_uniform,
        predicted_log_ratio,
        measured_log_ratio,
        verdict,
    })
}
