//! Piecewise-constant dosing protocols and exact simulation via matrix
//! exponentials.

use nalgebra::DVector;

use crate::dose::SystemModel;
use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::perron::perron_eigenpair;

/// When the log-scale of the running state exceeds this, the state is
/// renormalized and the factor is carried as a log offset. Long horizons
/// with positive dominant eigenvalue are the normal regime here, so this
/// has to be routine, not an error.
const RESCALE_LOG_THRESHOLD: f64 = 600.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolLabel {
    Uniform,
    Pulsed,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub dose: f64,
    pub duration: f64,
}

/// An ordered list of constant-dose segments, repeated `repeat` times.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    segments: Vec<Segment>,
    repeat: u32,
    label: ProtocolLabel,
}

impl Protocol {
    pub fn new(segments: Vec<Segment>, repeat: u32, label: ProtocolLabel) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Validation("protocol needs at least one segment".into()));
        }
        if repeat == 0 {
            return Err(Error::Validation("repeat count must be positive".into()));
        }
        for s in &segments {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::Validation(format!("segment duration must be positive, got {}", s.duration)));
            }
            if !s.dose.is_finite() {
                return Err(Error::Validation(format!("segment dose must be finite, got {}", s.dose)));
            }
        }
        Ok(Self { segments, repeat, label })
    }

    /// Constant dose `w` for `duration`, repeated.
    pub fn uniform(dose: f64, duration: f64, repeat: u32) -> Result<Self> {
        Self::new(vec![Segment { dose, duration }], repeat, ProtocolLabel::Uniform)
    }

    /// High dose `u` for half a unit period, then low dose `v` for the
    /// other half, repeated.
    pub fn pulsed(u: f64, v: f64, repeat: u32) -> Result<Self> {
        Self::new(
            vec![Segment { dose: u, duration: 0.5 }, Segment { dose: v, duration: 0.5 }],
            repeat,
            ProtocolLabel::Pulsed,
        )
    }

    /// Dose `u1` for `alpha * period`, then `u2` for the rest, repeated.
    pub fn alternation(u1: f64, u2: f64, alpha: f64, period: f64, repeat: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie strictly in (0, 1), got {alpha}")));
        }
        if !(period > 0.0) {
            return Err(Error::Validation(format!("period must be positive, got {period}")));
        }
        Self::new(
            vec![
                Segment { dose: u1, duration: alpha * period },
                Segment { dose: u2, duration: (1.0 - alpha) * period },
            ],
            repeat,
            ProtocolLabel::Custom,
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn repeat(&self) -> u32 {
        self.repeat
    }

    pub fn label(&self) -> ProtocolLabel {
        self.label
    }

    pub fn period(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn total_time(&self) -> f64 {
        self.period() * self.repeat as f64
    }

    /// Total drug delivered: `repeat * sum(dose * duration)`.
    pub fn total_drug(&self) -> f64 {
        let per_period: f64 = self.segments.iter().map(|s| s.dose * s.duration).sum();
        per_period * self.repeat as f64
    }
}

/// Free-function alias for [`Protocol::total_drug`].
pub fn total_drug(protocol: &Protocol) -> f64 {
    protocol.total_drug()
}

/// Time-stamped states and outputs of a simulated protocol.
///
/// States are stored renormalized; `log_offsets[i]` carries the log of the
/// factor taken out of `states[i]`, so the true state is
/// `states[i] * exp(log_offsets[i])` and `log_outputs[i]` is the exact
/// `ln y(t_i)` in that representation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub log_offsets: Vec<f64>,
    pub log_outputs: Vec<f64>,
    /// Asymptotic amplitude `c P x0` for constant irreducible protocols.
    pub kappa: Option<f64>,
    /// Rate used for the residual diagnostic.
    pub lambda_f_eff: Option<f64>,
    /// `mu(t) = y(t) exp(-lambda_f_eff t) - kappa`.
    pub residuals: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Outputs in linear scale; entries overflow to infinity when the log
    /// output exceeds f64 range.
    pub fn outputs(&self) -> Vec<f64> {
        self.log_outputs.iter().map(|l| l.exp()).collect()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn final_log_output(&self) -> f64 {
        *self.log_outputs.last().expect("trajectory is never empty")
    }

    /// Fills the residual diagnostic `mu(t) = y(t) e^{-lambda t} - kappa`.
    pub fn attach_asymptotics(&mut self, lambda_f_eff: f64, kappa: f64) {
        let residuals = self
            .times
            .iter()
            .zip(&self.log_outputs)
            .map(|(&t, &ly)| (ly - lambda_f_eff * t).exp() - kappa)
            .collect();
        self.lambda_f_eff = Some(lambda_f_eff);
        self.kappa = Some(kappa);
        self.residuals = Some(residuals);
    }

    /// CSV export: `t,y,log_y,x_1,...,x_n`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t,y,log_y");
        for i in 1..=n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        for i in 0..self.len() {
            let y = self.log_outputs[i].exp();
            out.push_str(&format!("{},{},{}", self.times[i], y, self.log_outputs[i]));
            let scale = self.log_offsets[i];
            for x in self.states[i].iter() {
                out.push_str(&format!(",{}", (x.ln() + scale).exp()));
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar JSON with the asymptotic diagnostics.
    pub fn sidecar_json(&self) -> String {
        let obj = serde_json::json!({
            "kappa": self.kappa,
            "lambda_F_eff": self.lambda_f_eff,
            "log_offset": self.log_offsets.last().copied().unwrap_or(0.0),
        });
        serde_json::to_string_pretty(&obj).expect("sidecar serialization cannot fail")
    }
}

/// Advances the model state through the protocol segment by segment, with
/// each segment propagated exactly by its matrix exponential. Samples land
/// on segment boundaries plus `samples_per_segment` interior points.
pub fn simulate(model: &SystemModel, protocol: &Protocol, samples_per_segment: usize) -> Result<Trajectory> {
    if samples_per_segment == 0 {
        return Err(Error::Validation("samples_per_segment must be at least 1".into()));
    }
    let substeps = samples_per_segment + 1;

    // One propagator per segment, shared across repeats.
    let mut steppers = Vec::with_capacity(protocol.segments().len());
    for seg in protocol.segments() {
        let a = model.matrix_at(seg.dose)?;
        let h = seg.duration / substeps as f64;
        steppers.push((matrix_exponential(a.entries(), h)?, h));
    }

    let mut x = model.x0.clone();
    let mut log_offset = 0.0;
    let mut t = 0.0;

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        log_offsets: Vec::new(),
        log_outputs: Vec::new(),
        kappa: None,
        lambda_f_eff: None,
        residuals: None,
    };
    record(&mut traj, model, t, &x, log_offset)?;

    for _ in 0..protocol.repeat() {
        for (stepper, h) in &steppers {
            for _ in 0..substeps {
                x = stepper * &x;
                t += h;
                let scale = x.amax();
                if !scale.is_finite() {
                    return Err(Error::Overflow { log_scale: log_offset });
                }
                if scale > 0.0 && scale.ln().abs() > RESCALE_LOG_THRESHOLD {
                    log_offset += scale.ln();
                    x /= scale;
                }
                record(&mut traj, model, t, &x, log_offset)?;
            }
        }
    }

    // Residual diagnostics make sense for a constant-dose protocol on an
    // irreducible matrix: y(t) = e^{lambda t}(kappa + mu(t)).
    let doses: Vec<f64> = protocol.segments().iter().map(|s| s.dose).collect();
    if doses.windows(2).all(|w| w[0] == w[1]) {
        let a = model.matrix_at(doses[0])?;
        if a.is_irreducible() {
            let p = perron_eigenpair(&a)?;
            let kappa = model.c.dot(&(&p.projection * &model.x0));
            traj.attach_asymptotics(p.lambda_f, kappa);
        }
    }

    Ok(traj)
}

fn record(traj: &mut Trajectory, model: &SystemModel, t: f64, x: &DVector<f64>, log_offset: f64) -> Result<()> {
    let y = model.output(x);
    if !(y > 0.0) {
        return Err(Error::NonpositiveOutput { time: t });
    }
    traj.times.push(t);
    traj.states.push(x.clone());
    traj.log_offsets.push(log_offset);
    traj.log_outputs.push(y.ln() + log_offset);
    Ok(())
}

/// Least-squares slope of `ln y(t)` against `t` over the window
/// `[T (1 - tail_fraction), T]`. Exact for exponentials; zero for constant
/// output.
pub fn estimate_log_rate(traj: &Trajectory, tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Validation(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let t_end = traj.final_time();
    let start = t_end * (1.0 - tail_fraction);
    let window: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.log_outputs)
        .filter(|(&t, _)| t >= start - 1e-12 * t_end.abs())
        .map(|(&t, &l)| (t, l))
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientSamples { available: window.len() });
    }
    if window.iter().any(|(_, l)| !l.is_finite()) {
        return Err(Error::NonpositiveOutput { time: t_end });
    }
    let m = window.len() as f64;
    let t_mean = window.iter().map(|(t, _)| t).sum::<f64>() / m;
    let l_mean = window.iter().map(|(_, l)| l).sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, l) in &window {
        num += (t - t_mean) * (l - l_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Err(Error::InsufficientSamples { available: window.len() });
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dose::{DoseFamily, FamilyVariant, SystemModel};
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, DMatrix};

    fn scalar_model(lambda: f64) -> SystemModel {
        let family = DoseFamily::new(
            FamilyVariant::Affine { a0: dmatrix![lambda], a1: DMatrix::zeros(1, 1) },
            (0.0, 1.0),
        )
        .unwrap();
        SystemModel::new(family, DVector::from_vec(vec![3.0]), DVector::from_vec(vec![2.0])).unwrap()
    }

    #[test]
    fn total_drug_examples() {
        let pulsed = Protocol::pulsed(2.0, 0.0, 7).unwrap();
        assert_abs_diff_eq!(pulsed.total_drug(), 7.0, epsilon = 0.0);

        let uniform = Protocol::uniform(1.5, 1.0, 10).unwrap();
        assert_abs_diff_eq!(uniform.total_drug(), 15.0, epsilon = 0.0);

        let single = Protocol::new(vec![Segment { dose: 0.7, duration: 2.0 }], 1, ProtocolLabel::Custom).unwrap();
        assert_abs_diff_eq!(single.total_drug(), 1.4, epsilon = 1e-15);
    }

    #[test]
    fn zero_duration_rejected() {
        let err = Protocol::new(vec![Segment { dose: 1.0, duration: 0.0 }], 1, ProtocolLabel::Custom);
        assert!(err.is_err());
    }

    #[test]
    fn scalar_exponential_simulation() {
        let model = scalar_model(0.35);
        let protocol = Protocol::uniform(0.5, 4.0, 3).unwrap();
        let traj = simulate(&model, &protocol, 4).unwrap();
        let expected = (3.0_f64 * 2.0).ln() + 0.35 * 12.0;
        assert_abs_diff_eq!(traj.final_log_output(), expected, epsilon = 1e-9);
    }

    #[test]
    fn exact_exponential_rate_recovered() {
        let model = scalar_model(2.0);
        let protocol = Protocol::uniform(0.0, 10.0, 1).unwrap();
        let traj = simulate(&model, &protocol, 40).unwrap();
        let rate = estimate_log_rate(&traj, 1.0).unwrap();
        assert_abs_diff_eq!(rate, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_output_rate_is_zero() {
        let model = scalar_model(0.0);
        let protocol = Protocol::uniform(0.0, 5.0, 1).unwrap();
        let traj = simulate(&model, &protocol, 10).unwrap();
        assert_abs_diff_eq!(estimate_log_rate(&traj, 0.5).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn long_horizon_rescales_instead_of_overflowing() {
        let model = scalar_model(2.0);
        // ln y(T) = ln 6 + 2 * 1000, far beyond linear-scale f64 range.
        let protocol = Protocol::uniform(0.0, 1000.0, 1).unwrap();
        let traj = simulate(&model, &protocol, 100).unwrap();
        assert_abs_diff_eq!(traj.final_log_output(), (6.0_f64).ln() + 2000.0, epsilon = 1e-6);
        assert!(traj.log_offsets.last().unwrap() > &0.0);
    }

    #[test]
    fn insufficient_samples_rejected() {
        let model = scalar_model(1.0);
        let protocol = Protocol::uniform(0.0, 1.0, 1).unwrap();
        let traj = simulate(&model, &protocol, 1).unwrap();
        // 3 samples total, but a tiny tail keeps only the last one.
        assert!(matches!(estimate_log_rate(&traj, 0.2), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn residuals_attached_for_constant_irreducible_protocol() {
        let family = DoseFamily::new(FamilyVariant::Dip { a: 1.0, b: 1.0, d: -1.0, k: 1.0 }, (0.0, 5.0)).unwrap();
        let model = SystemModel::new(
            family,
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap();
        let traj = simulate(&model, &Protocol::uniform(1.0, 20.0, 1).unwrap(), 20).unwrap();
        let res = traj.residuals.as_ref().unwrap();
        assert!(res.last().unwrap().abs() < 1e-8);
        assert!(traj.kappa.unwrap() > 0.0);
    }
}
