//! Norms, energy bookkeeping, inequality checks, growth fits and the regime
//! classifier.

mod inequalities;
mod verify;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ExplicitTerms, ForcingSpec, ModelParams, TrajectoryRecord};
use crate::spectral::SpectralField;
use crate::{Error, Result};

pub use inequalities::{
    calibrate_ladyzhenskaya, check_inequalities, trilinear_constant, Check, CheckKind,
    InequalityReport, InequalitySuite, LadyCalibration, ROUNDING_ALLOWANCE,
};
pub use verify::{
    run_verification, CheckSummary, VerificationSummary, VerifyOptions, LADY_SAFETY_FACTOR,
    LADY_SAMPLES,
};

/// `(‖u‖₂, ‖∇u‖₂, ‖Δu‖₂, ‖∂₁u‖₂, ‖∂₂u‖₂)`, by Parseval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub grad: f64,
    pub lap: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Default)]
struct SquaredNorms {
    l2: f64,
    grad: f64,
    lap: f64,
    d1: f64,
    d2: f64,
}

fn squared_norms(u: &SpectralField) -> SquaredNorms {
    let mut s = SquaredNorms::default();
    for (m, c) in u.iter() {
        let c2 = c * c;
        let (a, b) = ((m.l1 * m.l1) as f64, (m.l2 * m.l2) as f64);
        s.l2 += c2;
        s.d1 += a * c2;
        s.d2 += b * c2;
        s.grad += (a + b) * c2;
        s.lap += (a + b) * (a + b) * c2;
    }
    s
}

pub fn norms(u: &SpectralField) -> Norms {
    let s = squared_norms(u);
    Norms {
        l2: s.l2.sqrt(),
        grad: s.grad.sqrt(),
        lap: s.lap.sqrt(),
        d1: s.d1.sqrt(),
        d2: s.d2.sqrt(),
    }
}

/// Diagnostics of one state along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSample {
    pub step: u64,
    pub t: f64,
    pub l2_norm_sq: f64,
    pub grad_norm_sq: f64,
    pub lap_norm_sq: f64,
    pub d1_norm_sq: f64,
    pub d2_norm_sq: f64,
    /// Discrete `d/dt(½‖u‖₂²)` minus the energy identity's right-hand side,
    /// divided by `max(1, ‖∇u‖₂²)`. Centred difference in the interior,
    /// one-sided at the ends; absent for a single-state record.
    pub energy_residual: Option<f64>,
    /// Largest coefficient on a mode with `l1 ≠ 0`.
    pub x1_dependent_max: f64,
}

impl DiagnosticSample {
    pub fn of(u: &SpectralField, step: u64, t: f64) -> Self {
        let s = squared_norms(u);
        Self {
            step,
            t,
            l2_norm_sq: s.l2,
            grad_norm_sq: s.grad,
            lap_norm_sq: s.lap,
            d1_norm_sq: s.d1,
            d2_norm_sq: s.d2,
            energy_residual: None,
            x1_dependent_max: u.max_x1_dependent(),
        }
    }
}

/// Right-hand side of the energy identity,
/// `−μ‖∇u‖₂² + α‖u‖₂² + β⟨v_u,u⟩₂ + ⟨K,u⟩₂`.
pub fn energy_identity_rhs(
    u: &SpectralField,
    k_t: Option<&SpectralField>,
    p: &ModelParams,
    terms: &dyn ExplicitTerms,
) -> Result<f64> {
    let s = squared_norms(u);
    let beta_term = if p.beta != 0.0 {
        p.beta * terms.v_inner(u)?
    } else {
        0.0
    };
    Ok(-p.mu * s.grad + p.alpha * s.l2 + beta_term + k_t.map_or(0.0, |k| k.dot(u)))
}

/// Energy-balance residual at every interior state of a window of
/// consecutive `(t, u)` pairs: centred `d/dt(½‖u‖₂²)` minus the identity's
/// right-hand side, divided by `max(1, ‖∇u‖₂²)`.
pub fn energy_balance_residual(
    window: &[(f64, SpectralField)],
    p: &ModelParams,
    forcing: &ForcingSpec,
    terms: &dyn ExplicitTerms,
) -> Result<Vec<f64>> {
    if window.len() < 3 {
        return Err(Error::WindowTooShort {
            needed: 3,
            got: window.len(),
        });
    }
    window
        .windows(3)
        .map(|w| {
            let (t0, u0) = (&w[0].0, &w[0].1);
            let (t1, u1) = (w[1].0, &w[1].1);
            let (t2, u2) = (&w[2].0, &w[2].1);
            let ddt = 0.5 * (u2.norm_sq() - u0.norm_sq()) / (t2 - t0);
            let k = forcing.at(t1);
            let rhs = energy_identity_rhs(u1, k.as_ref(), p, terms)?;
            Ok((ddt - rhs) / squared_norms(u1).grad.max(1.0))
        })
        .collect()
}

/// Least-squares growth rate of `log‖u(t)‖₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    /// RMS deviation of `log‖u‖₂` from the fitted line.
    pub rms_residual: f64,
    pub samples_used: usize,
}

/// Fit `log‖u(t)‖₂ ≈ a + rate·t` over the trailing half of the series.
pub fn fit_growth_rate(series: &[(f64, f64)]) -> Result<GrowthFit> {
    const MIN_SAMPLES: usize = 10;
    if series.len() < MIN_SAMPLES {
        return Err(Error::WindowTooShort {
            needed: MIN_SAMPLES,
            got: series.len(),
        });
    }
    if let Some((index, &(_, value))) = series
        .iter()
        .enumerate()
        .find(|(_, (_, v))| !(*v > 0.0) || !v.is_finite())
    {
        return Err(Error::UndefinedLog { index, value });
    }
    let tail = &series[series.len() / 2..];
    let n = tail.len() as f64;
    let t_mean = tail.iter().map(|(t, _)| t).sum::<f64>() / n;
    let y: Vec<f64> = tail.iter().map(|(_, v)| v.ln()).collect();
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for ((t, _), yi) in tail.iter().zip(&y) {
        let dt = t - t_mean;
        sxy += dt * (yi - y_mean);
        sxx += dt * dt;
    }
    if sxx == 0.0 {
        return Err(Error::WindowTooShort {
            needed: MIN_SAMPLES,
            got: 1,
        });
    }
    let rate = sxy / sxx;
    let intercept = y_mean - rate * t_mean;
    let ss: f64 = tail
        .iter()
        .zip(&y)
        .map(|((t, _), yi)| (yi - intercept - rate * t).powi(2))
        .sum();
    Ok(GrowthFit {
        rate,
        intercept,
        rms_residual: (ss / n).sqrt(),
        samples_used: tail.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    AttractorRegime,
    Marginal,
    GrowUpCandidate,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegimeLabel::AttractorRegime => "attractor-regime",
            RegimeLabel::Marginal => "marginal",
            RegimeLabel::GrowUpCandidate => "grow-up-candidate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    /// Decay margin `ω`.
    pub omega: f64,
    pub label: RegimeLabel,
    pub note: Option<String>,
}

pub const OPEN_BAND_NOTE: &str = "paper leaves this range unresolved";

/// `ω = μ − π|β|` for `α ≤ 0`, `ω = μ − α − π|β|` for `α > 0`.
pub fn classify_regime(p: &ModelParams) -> RegimeVerdict {
    let coupling = PI * p.beta.abs();
    let omega = if p.alpha <= 0.0 {
        p.mu - coupling
    } else {
        p.mu - p.alpha - coupling
    };
    let label = if omega > 0.0 {
        RegimeLabel::AttractorRegime
    } else if p.alpha > p.mu {
        RegimeLabel::GrowUpCandidate
    } else {
        RegimeLabel::Marginal
    };
    let in_open_band = p.alpha > p.mu - coupling && p.alpha <= p.mu;
    let note = (label == RegimeLabel::Marginal && in_open_band).then(|| OPEN_BAND_NOTE.to_string());
    RegimeVerdict { omega, label, note }
}

/// Outcome of the exponential-decay envelope check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// Largest `‖u(t)‖₂² / (e^{−ωt}‖u₀‖₂²)` over the samples.
    pub worst_ratio: f64,
    pub worst_time: f64,
    pub tolerance: f64,
}

/// Assert `‖u(t)‖₂² ≤ (1 + tol)·e^{−ωt}‖u₀‖₂²` at every sample of an
/// unforced run.
pub fn decay_envelope_check(
    record: &TrajectoryRecord,
    forcing: &ForcingSpec,
    omega: f64,
    tol: f64,
) -> Result<EnvelopeReport> {
    if !forcing.is_zero() {
        return Err(Error::NotApplicable(
            "decay envelope requires zero forcing".into(),
        ));
    }
    if !(omega > 0.0) {
        return Err(Error::NotApplicable(format!(
            "decay envelope requires omega > 0, got {omega}"
        )));
    }
    let first = record
        .samples
        .first()
        .ok_or_else(|| Error::NotApplicable("empty trajectory".into()))?;
    let (t0, e0) = (first.t, first.l2_norm_sq);
    let mut report = EnvelopeReport {
        pass: true,
        worst_ratio: 0.0,
        worst_time: t0,
        tolerance: tol,
    };
    if e0 == 0.0 {
        report.pass = record.samples.iter().all(|s| s.l2_norm_sq == 0.0);
        return Ok(report);
    }
    for s in &record.samples {
        let bound = (-omega * (s.t - t0)).exp() * e0;
        let ratio = s.l2_norm_sq / bound;
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_time = s.t;
        }
    }
    report.pass = report.worst_ratio <= 1.0 + tol;
    Ok(report)
}

/// Observed order `log₂(‖u_dt − u_{dt/2}‖ / ‖u_{dt/2} − u_{dt/4}‖)` from a
/// Richardson triplet of final states.
pub fn self_convergence_order(
    coarse: &SpectralField,
    mid: &SpectralField,
    fine: &SpectralField,
) -> Result<f64> {
    coarse.trunc().ensure_same_modes(mid.trunc())?;
    coarse.trunc().ensure_same_modes(fine.trunc())?;
    let e1 = (coarse - mid).norm_sq().sqrt();
    let e2 = (mid - fine).norm_sq().sqrt();
    if e2 == 0.0 {
        return Err(Error::Vacuous(
            "identical mid and fine solutions; order undefined".into(),
        ));
    }
    Ok((e1 / e2).log2())
}
