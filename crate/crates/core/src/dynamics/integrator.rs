//! IMEX time stepping and trajectory recording.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{
    ExplicitTerms, FieldSnapshot, ForcingSpec, ModelParams, PseudoSpectral, Scheme,
    StepperConfig, TrajectoryRecord, BLOWUP_GUARD,
};
use crate::analysis::DiagnosticSample;
use crate::spectral::{SpectralField, Truncation};
use crate::{Error, Result};

/// One time step of the IMEX schemes. Diffusion is solved implicitly per mode;
/// everything else is explicit.
pub struct Stepper<'a> {
    terms: &'a dyn ExplicitTerms,
    cfg: StepperConfig,
    params: ModelParams,
    forcing: &'a ForcingSpec,
    /// `dt·μ·|ℓ|²` per slot.
    stiffness: Array2<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        terms: &'a dyn ExplicitTerms,
        cfg: StepperConfig,
        params: ModelParams,
        forcing: &'a ForcingSpec,
    ) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let trunc = *terms.trunc();
        let mut stiffness = Array2::zeros((trunc.k1(), trunc.n2));
        for (slot, mode) in stiffness.iter_mut().zip(trunc.all_modes()) {
            *slot = cfg.dt * params.mu * mode.eigenvalue();
        }
        Ok(Self {
            terms,
            cfg,
            params,
            forcing,
            stiffness,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Explicit part `N(u, t)`.
    pub fn explicit(&self, u: &SpectralField, t: f64) -> Result<SpectralField> {
        let k = self.forcing.at(t);
        self.terms.explicit(u, k.as_ref(), &self.params)
    }

    /// Advance `u` from `t` by one step. `prev_explicit` carries `N` from the
    /// previous step for cnab2; it is `None` on the first step (which then
    /// uses imex-euler) and is updated in place.
    pub fn step(
        &self,
        u: &SpectralField,
        t: f64,
        prev_explicit: &mut Option<SpectralField>,
    ) -> Result<SpectralField> {
        let n_now = self.explicit(u, t)?;
        let dt = self.cfg.dt;
        let mut next = u.clone();
        match (self.cfg.scheme, prev_explicit.as_ref()) {
            (Scheme::Cnab2, Some(n_prev)) => {
                Zip::from(next.coeffs_mut())
                    .and(n_now.coeffs())
                    .and(n_prev.coeffs())
                    .and(&self.stiffness)
                    .for_each(|x, &a, &b, &s| {
                        *x = ((1.0 - 0.5 * s) * *x + dt * (1.5 * a - 0.5 * b)) / (1.0 + 0.5 * s);
                    });
            }
            _ => {
                Zip::from(next.coeffs_mut())
                    .and(n_now.coeffs())
                    .and(&self.stiffness)
                    .for_each(|x, &a, &s| *x = (*x + dt * a) / (1.0 + s));
            }
        }
        *prev_explicit = match self.cfg.scheme {
            Scheme::Cnab2 => Some(n_now),
            Scheme::ImexEuler => None,
        };
        let norm = next.norm_sq().sqrt();
        if !next.is_finite() || !(norm <= BLOWUP_GUARD) {
            return Err(Error::Divergence {
                time: t + dt,
                record: Box::default(),
            });
        }
        Ok(next)
    }
}

/// When to record diagnostics and field snapshots, in steps. The initial and
/// final states are always recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    pub every: u64,
    pub snapshot_every: Option<u64>,
}

impl ProbeSchedule {
    pub fn every(every: u64) -> Self {
        Self {
            every: every.max(1),
            snapshot_every: None,
        }
    }

    pub fn with_snapshots(mut self, every: u64) -> Self {
        self.snapshot_every = Some(every.max(1));
        self
    }
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        Self::every(1)
    }
}

/// A diagnostic sample waiting for the next state to complete its
/// centred-difference energy residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingResidual {
    /// `‖u‖₂²` one step before the sample, if the sample is not the first step.
    pub norm_sq_before: Option<f64>,
    /// Right-hand side of the energy identity at the sample.
    pub identity_rhs: f64,
}

/// Everything needed to continue an integration exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorState {
    pub step: u64,
    pub u: SpectralField,
    pub prev_explicit: Option<SpectralField>,
    /// `‖u‖₂²` of the state one step back.
    pub prev_norm_sq: Option<f64>,
    pub pending: Option<PendingResidual>,
    pub record: TrajectoryRecord,
}

/// Drives a [`Stepper`] and records diagnostics on a schedule.
pub struct Integrator<'a> {
    stepper: Stepper<'a>,
    schedule: ProbeSchedule,
    state: IntegratorState,
}

impl<'a> Integrator<'a> {
    pub fn new(
        terms: &'a dyn ExplicitTerms,
        cfg: StepperConfig,
        params: ModelParams,
        forcing: &'a ForcingSpec,
        schedule: ProbeSchedule,
        u0: SpectralField,
    ) -> Result<Self> {
        check_inputs(terms.trunc(), &u0, forcing)?;
        let state = IntegratorState {
            step: 0,
            u: u0,
            prev_explicit: None,
            prev_norm_sq: None,
            pending: None,
            record: TrajectoryRecord::default(),
        };
        let mut me = Self {
            stepper: Stepper::new(terms, cfg, params, forcing)?,
            schedule,
            state,
        };
        me.probe()?;
        Ok(me)
    }

    /// Continue from a saved state.
    pub fn resume(
        terms: &'a dyn ExplicitTerms,
        cfg: StepperConfig,
        params: ModelParams,
        forcing: &'a ForcingSpec,
        schedule: ProbeSchedule,
        state: IntegratorState,
    ) -> Result<Self> {
        check_inputs(terms.trunc(), &state.u, forcing)?;
        Ok(Self {
            stepper: Stepper::new(terms, cfg, params, forcing)?,
            schedule,
            state,
        })
    }

    pub fn state(&self) -> &IntegratorState {
        &self.state
    }

    pub fn total_steps(&self) -> u64 {
        self.stepper.cfg.n_steps()
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.total_steps()
    }

    /// Advance until `stop_step` (clamped to the final step). On divergence
    /// the error carries the record collected so far, including the last
    /// finite state.
    pub fn run_until(&mut self, stop_step: u64) -> Result<()> {
        let stop = stop_step.min(self.total_steps());
        while self.state.step < stop {
            let t = self.stepper.cfg.time_of(self.state.step);
            let next = match self
                .stepper
                .step(&self.state.u, t, &mut self.state.prev_explicit)
            {
                Ok(next) => next,
                Err(Error::Divergence { time, .. }) => return Err(self.diverged(time)),
                Err(e) => return Err(e),
            };
            let norm_sq_now = self.state.u.norm_sq();
            let norm_sq_next = next.norm_sq();
            self.resolve_pending(Some(norm_sq_next), norm_sq_now);
            self.state.prev_norm_sq = Some(norm_sq_now);
            self.state.u = next;
            self.state.step += 1;
            self.probe()?;
        }
        Ok(())
    }

    /// Run to the end and return the record.
    pub fn run(mut self) -> Result<TrajectoryRecord> {
        self.run_until(u64::MAX)?;
        Ok(self.finish())
    }

    /// Close the record: the final sample gets a one-sided residual.
    pub fn finish(mut self) -> TrajectoryRecord {
        let now = self.state.u.norm_sq();
        self.resolve_pending(None, now);
        self.state.record
    }

    pub fn into_state(self) -> IntegratorState {
        self.state
    }

    fn diverged(&mut self, time: f64) -> Error {
        let last_recorded = self.state.record.samples.last().map(|s| s.step);
        if last_recorded != Some(self.state.step) {
            if let Ok(sample) = self.sample() {
                self.state.record.samples.push(sample);
            }
        }
        let mut record = self.state.record.clone();
        record.diverged_at = Some(time);
        Error::Divergence {
            time,
            record: Box::new(record),
        }
    }

    fn sample(&self) -> Result<DiagnosticSample> {
        let t = self.stepper.cfg.time_of(self.state.step);
        Ok(DiagnosticSample::of(&self.state.u, self.state.step, t))
    }

    fn probe(&mut self) -> Result<()> {
        let step = self.state.step;
        let last = step == self.total_steps();
        if step.is_multiple_of(self.schedule.every) || last {
            let sample = self.sample()?;
            let u = &self.state.u;
            let p = &self.stepper.params;
            let k = self.stepper.forcing.at(sample.t);
            let beta_term = if p.beta != 0.0 {
                p.beta * self.stepper.terms.v_inner(u)?
            } else {
                0.0
            };
            let identity_rhs = -p.mu * sample.grad_norm_sq
                + p.alpha * sample.l2_norm_sq
                + beta_term
                + k.map_or(0.0, |k| k.dot(u));
            self.state.pending = Some(PendingResidual {
                norm_sq_before: self.state.prev_norm_sq,
                identity_rhs,
            });
            self.state.record.samples.push(sample);
        }
        if let Some(every) = self.schedule.snapshot_every {
            if step.is_multiple_of(every) || last {
                self.state.record.snapshots.push(FieldSnapshot {
                    step,
                    t: self.stepper.cfg.time_of(step),
                    field: self.state.u.clone(),
                });
            }
        }
        Ok(())
    }

    /// Fill the energy residual of the pending sample. `after` is `‖u‖₂²` one
    /// step past the sample (if known); `at` is `‖u‖₂²` at the sample.
    fn resolve_pending(&mut self, after: Option<f64>, at: f64) {
        let Some(pending) = self.state.pending.take() else {
            return;
        };
        let dt = self.stepper.cfg.dt;
        let ddt = match (pending.norm_sq_before, after) {
            (Some(before), Some(after)) => Some((after - before) / (4.0 * dt)),
            (None, Some(after)) => Some((after - at) / (2.0 * dt)),
            (Some(before), None) => Some((at - before) / (2.0 * dt)),
            (None, None) => None,
        };
        if let (Some(ddt), Some(sample)) = (ddt, self.state.record.samples.last_mut()) {
            sample.energy_residual =
                Some((ddt - pending.identity_rhs) / sample.grad_norm_sq.max(1.0));
        }
    }
}

fn check_inputs(trunc: &Truncation, u0: &SpectralField, forcing: &ForcingSpec) -> Result<()> {
    trunc.ensure_same_modes(u0.trunc())?;
    if !u0.is_finite() {
        return Err(Error::config("initial state has non-finite coefficients"));
    }
    if !u0.is_admissible() {
        return Err(Error::config(format!(
            "initial state has weight {:.3e} on inadmissible modes",
            u0.max_inadmissible()
        )));
    }
    if let Some(k) = forcing.at(0.0) {
        trunc.ensure_same_modes(k.trunc())?;
    }
    Ok(())
}

/// Integrate with the pseudo-spectral right-hand side.
pub fn integrate(
    u0: &SpectralField,
    cfg: StepperConfig,
    p: ModelParams,
    forcing: &ForcingSpec,
    probes: ProbeSchedule,
) -> Result<TrajectoryRecord> {
    let terms = PseudoSpectral::new(*u0.trunc());
    Integrator::new(&terms, cfg, p, forcing, probes, u0.clone())?.run()
}
