//! Right-hand side of the evolution equation, IMEX time stepping and the
//! exact Galerkin interaction tensor.
//!
//! The projected evolution equation reads
//!
//! ```text
//! u' = −ℙB(u,u) + μΔu + αu + βℙv_u + K,    B(u,w) = u·∂₁w + v_u·∂₂w.
//! ```
//!
//! Diffusion is diagonal in the basis and is always treated implicitly; the
//! remaining terms form the explicit part `N(u, t)`, supplied by an
//! [`ExplicitTerms`] implementation: pseudo-spectral ([`PseudoSpectral`]) or
//! tensor contraction ([`TensorOracle`]).

mod integrator;
mod nonlinear;
mod tensor;

use serde::{Deserialize, Serialize};

use crate::analysis::DiagnosticSample;
use crate::spectral::SpectralField;
use crate::{Error, Result};

pub use integrator::{
    integrate, Integrator, IntegratorState, PendingResidual, ProbeSchedule, Stepper,
};
pub use nonlinear::{nonlinearity_b, rhs, ExplicitTerms, Nonlinearity, PseudoSpectral};
pub use tensor::{galerkin_tensor, rhs_oracle, GalerkinTensor, TensorOracle, DEFAULT_TENSOR_CAP};

/// Norm above which a trajectory is declared divergent.
pub const BLOWUP_GUARD: f64 = 1e12;

/// Diffusion `μ`, linear gain `α` and coupling `β` to the vertical velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(mu: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { mu, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::config("mu must be positive"));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::config("alpha and beta must be finite"));
        }
        Ok(())
    }
}

/// Scalar time modulation of a forcing field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    /// `mean + amplitude·sin(frequency·t + phase)`.
    Harmonic {
        mean: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Harmonic {
                mean,
                amplitude,
                frequency,
                phase,
            } => mean + amplitude * (frequency * t + phase).sin(),
        }
    }
}

/// Forcing `K(t)`; always an admissible field.
#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Constant(SpectralField),
    Modulated {
        field: SpectralField,
        envelope: Envelope,
    },
}

impl ForcingSpec {
    /// Time-independent forcing. Inadmissible fields are rejected rather
    /// than silently projected.
    pub fn constant(field: SpectralField) -> Result<Self> {
        Self::ensure_admissible(&field)?;
        Ok(ForcingSpec::Constant(field))
    }

    pub fn modulated(field: SpectralField, envelope: Envelope) -> Result<Self> {
        Self::ensure_admissible(&field)?;
        Ok(ForcingSpec::Modulated { field, envelope })
    }

    fn ensure_admissible(field: &SpectralField) -> Result<()> {
        if !field.is_admissible() {
            return Err(Error::config(format!(
                "forcing has weight {:.3e} on inadmissible modes; K must satisfy PK = K",
                field.max_inadmissible()
            )));
        }
        if !field.is_finite() {
            return Err(Error::config("forcing has non-finite coefficients"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::Zero => true,
            ForcingSpec::Constant(f) => f.max_abs() == 0.0,
            ForcingSpec::Modulated { field, .. } => field.max_abs() == 0.0,
        }
    }

    /// `K(t)`, or `None` for zero forcing.
    pub fn at(&self, t: f64) -> Option<SpectralField> {
        match self {
            ForcingSpec::Zero => None,
            ForcingSpec::Constant(f) => Some(f.clone()),
            ForcingSpec::Modulated { field, envelope } => Some(field.scaled(envelope.value(t))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImexEuler,
    Cnab2,
}

impl Scheme {
    /// Formal order of accuracy.
    pub fn order(&self) -> u32 {
        match self {
            Scheme::ImexEuler => 1,
            Scheme::Cnab2 => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex-euler" => Ok(Scheme::ImexEuler),
            "cnab2" => Ok(Scheme::Cnab2),
            other => Err(Error::config(format!(
                "unknown scheme '{other}' (expected imex-euler or cnab2)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
}

impl StepperConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self { scheme, dt, t_end };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::config("t_end must be non-negative"));
        }
        Ok(())
    }

    /// Number of steps; `t_end` is rounded to the nearest multiple of `dt`.
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Time of step `k`, computed as `k·dt` to avoid accumulated drift.
    pub fn time_of(&self, step: u64) -> f64 {
        step as f64 * self.dt
    }
}

/// A stored field on the trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub step: u64,
    pub t: f64,
    pub field: SpectralField,
}

/// Diagnostics collected along a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<DiagnosticSample>,
    pub snapshots: Vec<FieldSnapshot>,
    /// Time of the first divergent state, if the run blew up.
    pub diverged_at: Option<f64>,
}

impl TrajectoryRecord {
    /// `(t, ‖u‖₂)` pairs for growth-rate fitting.
    pub fn l2_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.l2_norm_sq.sqrt())).collect()
    }

    pub fn last(&self) -> Option<&DiagnosticSample> {
        self.samples.last()
    }
}
