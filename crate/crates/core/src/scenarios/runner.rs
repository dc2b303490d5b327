//! Executes suites: stepping, per-step trackers, snapshots, checkpoints and
//! check evaluation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    decay_envelope_check, fit_growth_rate, Check, CheckKind, DiagnosticSample, GrowthFit,
    RegimeVerdict,
};
use crate::dynamics::{
    galerkin_tensor, Integrator, IntegratorState, PendingResidual, ProbeSchedule, PseudoSpectral,
    TensorOracle, TrajectoryRecord,
};
use crate::fsutil::write_atomic;
use crate::spectral::{basis_norm_constant, snapshot, ModeIndex, SpectralField};
use crate::{Error, Result};

use super::output::write_outputs;
use super::{CheckSpec, Scenario, ScenarioConfig, ScenarioKind, Suite};

pub const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_FORMAT: &str = "glory-checkpoint";
const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Run directory; nothing is written without one.
    pub out_dir: Option<PathBuf>,
    /// Checkpoint and stop once this time is reached (single runs only).
    pub stop_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged { time: f64 },
    Stopped { step: u64, t: f64 },
}

/// Quantities tracked at every step rather than at probes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Trackers {
    max_drift: Option<f64>,
    max_oracle_gap: Option<f64>,
}

fn raise(slot: &mut Option<f64>, value: f64) {
    // NaN must stick so a broken run cannot pass.
    *slot = Some(match *slot {
        Some(old) if old.is_nan() || old >= value => old,
        _ => value,
    });
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberOutcome {
    pub name: String,
    #[serde(flatten)]
    pub status: RunStatus,
    pub exploratory: bool,
    pub expect_divergence: bool,
    pub steps: u64,
    pub growth_fit: Option<GrowthFit>,
    pub max_drift: Option<f64>,
    pub max_oracle_gap: Option<f64>,
    pub checks: Vec<Check>,
    pub final_sample: Option<DiagnosticSample>,
    #[serde(skip)]
    pub record: TrajectoryRecord,
}

impl MemberOutcome {
    pub fn pass(&self) -> bool {
        !matches!(self.status, RunStatus::Stopped { .. }) && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: String,
    pub kind: ScenarioKind,
    pub regime: RegimeVerdict,
    pub config: ScenarioConfig,
    pub members: Vec<MemberOutcome>,
}

impl SuiteOutcome {
    /// Every non-exploratory run finished and passed its checks.
    pub fn all_pass(&self) -> bool {
        self.members.iter().filter(|m| !m.exploratory).all(|m| m.pass())
    }

    pub fn unexpected_divergence(&self) -> bool {
        self.members
            .iter()
            .any(|m| matches!(m.status, RunStatus::Diverged { .. }) && !m.expect_divergence)
    }

    pub fn is_stopped(&self) -> bool {
        self.members
            .iter()
            .any(|m| matches!(m.status, RunStatus::Stopped { .. }))
    }

    pub fn member(&self, name: &str) -> Option<&MemberOutcome> {
        self.members.iter().find(|m| m.name == name)
    }
}

pub enum ResumeOutcome {
    /// The checkpoint belongs to a finished run; nothing was done.
    AlreadyComplete,
    Ran(Box<SuiteOutcome>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    complete: bool,
    config: ScenarioConfig,
    member: String,
    step: u64,
    t: f64,
    u: Vec<f64>,
    prev_explicit: Option<Vec<f64>>,
    prev_norm_sq: Option<f64>,
    pending: Option<PendingResidual>,
    trackers: Trackers,
    samples: Vec<DiagnosticSample>,
}

impl Checkpoint {
    fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let head: serde_json::Value = serde_json::from_slice(&bytes)?;
        if head.get("format").and_then(|f| f.as_str()) != Some(CHECKPOINT_FORMAT) {
            return Err(Error::Format(format!(
                "{} is not a checkpoint file",
                path.display()
            )));
        }
        let version = head.get("version").and_then(|v| v.as_u64());
        if version != Some(CHECKPOINT_VERSION as u64) {
            return Err(Error::Format(format!(
                "checkpoint version {} does not match supported version {CHECKPOINT_VERSION}",
                version.map_or("missing".to_string(), |v| v.to_string())
            )));
        }
        Ok(serde_json::from_value(head)?)
    }

    fn into_state(self, s: &Scenario) -> Result<(IntegratorState, Trackers)> {
        let trunc = s.trunc;
        let state = IntegratorState {
            step: self.step,
            u: SpectralField::from_flat(trunc, &self.u)?,
            prev_explicit: self
                .prev_explicit
                .map(|v| SpectralField::from_flat(trunc, &v))
                .transpose()?,
            prev_norm_sq: self.prev_norm_sq,
            pending: self.pending,
            record: TrajectoryRecord {
                samples: self.samples,
                ..TrajectoryRecord::default()
            },
        };
        Ok((state, self.trackers))
    }
}

struct MemberCtx<'a> {
    dir: Option<&'a Path>,
    config: &'a ScenarioConfig,
    checkpoint: bool,
    snapshot_every: Option<u64>,
    checkpoint_every: Option<u64>,
    stop_at: Option<f64>,
}

impl MemberCtx<'_> {
    fn write_checkpoint(
        &self,
        s: &Scenario,
        state: &IntegratorState,
        trackers: &Trackers,
        complete: bool,
    ) -> Result<()> {
        let Some(dir) = self.dir.filter(|_| self.checkpoint) else {
            return Ok(());
        };
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            complete,
            config: self.config.clone(),
            member: s.name.clone(),
            step: state.step,
            t: s.stepper.time_of(state.step),
            u: state.u.to_flat(),
            prev_explicit: state.prev_explicit.as_ref().map(|f| f.to_flat()),
            prev_norm_sq: state.prev_norm_sq,
            pending: state.pending.clone(),
            trackers: trackers.clone(),
            samples: state.record.samples.clone(),
        };
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join(CHECKPOINT_FILE), &serde_json::to_vec(&ck)?)
    }

    fn maybe_snapshot(&self, s: &Scenario, step: u64, u: &SpectralField, last: bool) -> Result<()> {
        let (Some(dir), Some(every)) = (self.dir, self.snapshot_every) else {
            return Ok(());
        };
        if step.is_multiple_of(every) || last {
            let path = dir.join("snapshots").join(format!("{}-{step:09}.gspc", s.name));
            std::fs::create_dir_all(path.parent().expect("snapshot dir"))?;
            snapshot::write(&path, u)?;
        }
        Ok(())
    }
}

/// `Σ|c_ℓ − ĉ_ℓ|·‖e_ℓ‖_∞ / e^{rate·t}`: an upper bound on the sup-norm
/// distance to `e^{rate·t} sin(x₂)`, relative to its amplitude.
fn closed_form_drift(u: &SpectralField, rate: f64, t: f64) -> f64 {
    let growth = (rate * t).exp();
    let target = ModeIndex { l1: 0, l2: 1 };
    let bound: f64 = u
        .iter()
        .map(|(m, c)| {
            let exact = if m == target { PI * growth } else { 0.0 };
            (c - exact).abs() * basis_norm_constant(&m).expect("stored modes are valid")
        })
        .sum();
    bound / growth
}

fn track(s: &Scenario, trackers: &mut Trackers, u: &SpectralField, t: f64, shadow: Option<&SpectralField>) {
    for check in &s.checks {
        if let CheckSpec::ClosedFormDrift { rate, .. } = check {
            raise(&mut trackers.max_drift, closed_form_drift(u, *rate, t));
        }
    }
    if let Some(w) = shadow {
        raise(&mut trackers.max_oracle_gap, (u - w).max_abs());
    }
}

fn run_member(s: &Scenario, ctx: &MemberCtx, start: Option<Checkpoint>) -> Result<MemberOutcome> {
    let terms = PseudoSpectral::new(s.trunc);
    let schedule = ProbeSchedule::every(s.probe_every);
    let wants_oracle = s
        .checks
        .iter()
        .any(|c| matches!(c, CheckSpec::OracleDiscrepancy { .. }));
    let oracle = if wants_oracle {
        Some(TensorOracle::new(galerkin_tensor(s.trunc)?))
    } else {
        None
    };

    let fresh = start.is_none();
    let (mut it, mut trackers, mut shadow) = match start {
        None => {
            let u0 = s.initial.build(s.trunc)?;
            let shadow = oracle
                .as_ref()
                .map(|o| {
                    Integrator::new(o, s.stepper, s.params, &s.forcing, ProbeSchedule::every(u64::MAX), u0.clone())
                })
                .transpose()?;
            let it = Integrator::new(&terms, s.stepper, s.params, &s.forcing, schedule, u0)?;
            (it, Trackers::default(), shadow)
        }
        Some(ck) => {
            if oracle.is_some() {
                return Err(Error::config("oracle cross-check runs cannot be resumed"));
            }
            let (state, trackers) = ck.into_state(s)?;
            let it = Integrator::resume(&terms, s.stepper, s.params, &s.forcing, schedule, state)?;
            (it, trackers, None)
        }
    };

    let total = it.total_steps();
    let stop = ctx
        .stop_at
        .map_or(total, |t| ((t / s.stepper.dt).round() as u64).min(total));
    if fresh {
        let u = &it.state().u;
        track(s, &mut trackers, u, 0.0, shadow.as_ref().map(|w| &w.state().u));
        ctx.maybe_snapshot(s, 0, u, total == 0)?;
    }

    let mut diverged = None;
    while it.state().step < stop {
        let next = it.state().step + 1;
        match it.run_until(next) {
            Ok(()) => {}
            Err(Error::Divergence { time, record }) => {
                diverged = Some((time, *record));
                break;
            }
            Err(e) => return Err(e),
        }
        if let Some(w) = shadow.as_mut() {
            w.run_until(next)?;
        }
        let u = &it.state().u;
        track(
            s,
            &mut trackers,
            u,
            s.stepper.time_of(next),
            shadow.as_ref().map(|w| &w.state().u),
        );
        ctx.maybe_snapshot(s, next, u, next == total)?;
        if next < total && ctx.checkpoint_every.is_some_and(|every| next % every == 0) {
            ctx.write_checkpoint(s, it.state(), &trackers, false)?;
        }
    }

    let steps = it.state().step;
    let (status, record) = if let Some((time, record)) = diverged {
        (RunStatus::Diverged { time }, record)
    } else if steps < total {
        ctx.write_checkpoint(s, it.state(), &trackers, false)?;
        let status = RunStatus::Stopped {
            step: steps,
            t: s.stepper.time_of(steps),
        };
        (status, it.into_state().record)
    } else {
        ctx.write_checkpoint(s, it.state(), &trackers, true)?;
        (RunStatus::Completed, it.finish())
    };

    let (checks, growth_fit) = if matches!(status, RunStatus::Stopped { .. }) {
        (Vec::new(), None)
    } else {
        evaluate(s, &record, &trackers)?
    };
    Ok(MemberOutcome {
        name: s.name.clone(),
        status,
        exploratory: s.exploratory,
        expect_divergence: s.expect_divergence,
        steps,
        growth_fit,
        max_drift: trackers.max_drift,
        max_oracle_gap: trackers.max_oracle_gap,
        checks,
        final_sample: record.samples.last().cloned(),
        record,
    })
}

/// Largest value of `f` over samples with `t ≥ from`; NaN if there are none.
fn max_from(record: &TrajectoryRecord, from: f64, slack: f64, f: impl Fn(&DiagnosticSample) -> f64) -> f64 {
    record
        .samples
        .iter()
        .filter(|s| s.t >= from - slack)
        .map(f)
        .fold(f64::NAN, |acc, v| if acc.is_nan() || v > acc || v.is_nan() { v } else { acc })
}

fn evaluate(
    s: &Scenario,
    record: &TrajectoryRecord,
    trackers: &Trackers,
) -> Result<(Vec<Check>, Option<GrowthFit>)> {
    let half_dt = 0.5 * s.stepper.dt;
    let mut fit = None;
    let mut checks = Vec::new();
    for spec in &s.checks {
        let name = spec.name();
        let check = match spec {
            CheckSpec::ClosedFormDrift { tol, .. } => {
                Check::inequality(name, trackers.max_drift.unwrap_or(f64::NAN), *tol)
            }
            CheckSpec::GrowthRate { expected, tol } => match fit_growth_rate(&record.l2_series()) {
                Ok(f) => {
                    fit = Some(f);
                    Check::identity(name, f.rate - expected, *tol)
                }
                Err(_) => Check::identity(name, f64::NAN, *tol),
            },
            CheckSpec::DecayEnvelope { omega, tol } => {
                let report = decay_envelope_check(record, &s.forcing, *omega, *tol)?;
                let mut c = Check::inequality(name, report.worst_ratio, 1.0 + tol);
                c.pass = report.pass;
                c
            }
            CheckSpec::DecayBelow { threshold, by } => {
                let worst = max_from(record, *by, half_dt, |x| x.l2_norm_sq.sqrt());
                Check::inequality(name, worst, *threshold)
            }
            CheckSpec::AbsorbingBall { r_star, settle } => {
                let worst = max_from(record, *settle, half_dt, |x| x.lap_norm_sq.sqrt());
                Check::inequality(name, worst, *r_star)
            }
            CheckSpec::X1Invariance { tol } => {
                let worst = max_from(record, f64::NEG_INFINITY, 0.0, |x| x.x1_dependent_max);
                Check::inequality(name, worst, *tol)
            }
            CheckSpec::ReachesGuard => {
                let t = record.diverged_at.unwrap_or(f64::NAN);
                Check {
                    name: name.into(),
                    kind: CheckKind::Inequality,
                    lhs: t,
                    rhs: s.stepper.t_end,
                    slack: s.stepper.t_end - t,
                    pass: record.diverged_at.is_some(),
                }
            }
            CheckSpec::OracleDiscrepancy { tol } => {
                Check::inequality(name, trackers.max_oracle_gap.unwrap_or(f64::NAN), *tol)
            }
        };
        checks.push(check);
    }
    Ok((checks, fit))
}

fn checkpointable(suite: &Suite) -> bool {
    suite.members.len() == 1
        && !suite.members[0]
            .checks
            .iter()
            .any(|c| matches!(c, CheckSpec::OracleDiscrepancy { .. }))
}

fn context<'a>(suite: &'a Suite, opts: &'a RunOptions) -> Result<MemberCtx<'a>> {
    let single = checkpointable(suite);
    if !single && (opts.stop_at.is_some() || suite.config.checkpoint_every.is_some()) {
        return Err(Error::config(
            "checkpointing is supported for single-run scenarios without the tensor oracle only",
        ));
    }
    if opts.stop_at.is_some() && opts.out_dir.is_none() {
        return Err(Error::config("stopping early needs an output directory for the checkpoint"));
    }
    if let Some(t) = opts.stop_at {
        if !(t >= 0.0) {
            return Err(Error::config("stop time must be non-negative"));
        }
    }
    if suite.config.snapshot_every == Some(0) || suite.config.checkpoint_every == Some(0) {
        return Err(Error::config("snapshot_every and checkpoint_every must be at least 1"));
    }
    Ok(MemberCtx {
        dir: opts.out_dir.as_deref(),
        config: &suite.config,
        checkpoint: single,
        snapshot_every: suite.config.snapshot_every,
        checkpoint_every: suite.config.checkpoint_every,
        stop_at: opts.stop_at,
    })
}

fn finish(suite: &Suite, members: Vec<MemberOutcome>, dir: Option<&Path>) -> Result<SuiteOutcome> {
    let outcome = SuiteOutcome {
        name: suite.name.clone(),
        kind: suite.kind,
        regime: suite.regime.clone(),
        config: suite.config.clone(),
        members,
    };
    if let Some(dir) = dir {
        if !outcome.is_stopped() {
            write_outputs(dir, &outcome)?;
        }
    }
    Ok(outcome)
}

/// Run every member (in parallel; results keep suite order) and write the
/// run directory if one is given.
pub fn run_suite(suite: &Suite, opts: &RunOptions) -> Result<SuiteOutcome> {
    let ctx = context(suite, opts)?;
    let members = suite
        .members
        .par_iter()
        .map(|s| run_member(s, &ctx, None))
        .collect::<Result<Vec<_>>>()?;
    finish(suite, members, opts.out_dir.as_deref())
}

/// Continue the run whose checkpoint is `path` (the file or its run
/// directory). Outputs go to the checkpoint's directory.
pub fn resume_run(path: &Path, stop_at: Option<f64>) -> Result<ResumeOutcome> {
    let file = if path.is_dir() {
        path.join(CHECKPOINT_FILE)
    } else {
        path.to_path_buf()
    };
    if !file.exists() {
        return Err(Error::config(format!("checkpoint {} not found", file.display())));
    }
    let dir = file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let ck = Checkpoint::read(&file)?;
    if ck.complete {
        return Ok(ResumeOutcome::AlreadyComplete);
    }
    let suite = Suite::from_config(&ck.config)?;
    if !checkpointable(&suite) || suite.members[0].name != ck.member {
        return Err(Error::Format(format!(
            "checkpoint run '{}' does not match its configuration",
            ck.member
        )));
    }
    let opts = RunOptions {
        out_dir: Some(dir.clone()),
        stop_at,
    };
    let ctx = context(&suite, &opts)?;
    let member = run_member(&suite.members[0], &ctx, Some(ck))?;
    finish(&suite, vec![member], Some(&dir)).map(|o| ResumeOutcome::Ran(Box::new(o)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Truncation;

    #[test]
    fn drift_of_exact_solution_is_zero() {
        let t = Truncation::new(2, 2).unwrap();
        let u = SpectralField::from_modes(t, &[(ModeIndex::new(0, 1).unwrap(), PI * 0.5f64.exp())])
            .unwrap();
        assert!(closed_form_drift(&u, 0.5, 1.0) < 1e-15);
        let mut w = u.clone();
        w.set(ModeIndex::new(1, 2).unwrap(), 1e-3).unwrap();
        let d = closed_form_drift(&w, 0.5, 1.0);
        assert!((d - 1e-3 * std::f64::consts::SQRT_2 / PI / 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn raise_keeps_nan() {
        let mut slot = None;
        raise(&mut slot, 1.0);
        raise(&mut slot, f64::NAN);
        raise(&mut slot, 5.0);
        assert!(slot.unwrap().is_nan());
    }
}
