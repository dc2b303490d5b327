//! Named, reproducible experiments: initial data, forcing, stepping and the
//! checks that decide pass or fail.
//!
//! A [`Suite`] is built from a [`ScenarioConfig`] and executed by
//! [`run_suite`]; outputs land in a run directory as `diagnostics.csv`,
//! `report.json`, `snapshots/*.gspc` and, for single runs, a checkpoint.

mod config;
mod output;
mod runner;

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_regime, RegimeLabel, RegimeVerdict};
use crate::dynamics::{
    ForcingSpec, ModelParams, Scheme, StepperConfig, DEFAULT_TENSOR_CAP,
};
use crate::spectral::random::{random_admissible, rescale_to_grad_norm};
use crate::spectral::{mode_set, snapshot, ModeIndex, SpectralField, Truncation};
use crate::{Error, Result};

pub use config::{ForcingConfig, InitialConfig, ModeValue, ScenarioConfig};
pub use output::{diagnostics_csv, CSV_HEADER, CSV_VERSION_LINE, REPORT_SCHEMA_VERSION};
pub use runner::{
    resume_run, run_suite, MemberOutcome, ResumeOutcome, RunOptions, RunStatus, SuiteOutcome,
    CHECKPOINT_VERSION,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    ExplicitSolution,
    AttractorAbsorption,
    Growup,
    OracleCrosscheck,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::ExplicitSolution,
        ScenarioKind::AttractorAbsorption,
        ScenarioKind::Growup,
        ScenarioKind::OracleCrosscheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::ExplicitSolution => "explicit-solution",
            ScenarioKind::AttractorAbsorption => "attractor-absorption",
            ScenarioKind::Growup => "growup",
            ScenarioKind::OracleCrosscheck => "oracle-crosscheck",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
                Error::config(format!(
                    "unknown scenario '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Recipe for the initial state; resolved only when a run starts fresh.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `amplitude·sin(l2·x₂)`, i.e. coefficient `π·amplitude` on `(0, l2)`.
    SinX2 { l2: i32, amplitude: f64 },
    Mode { mode: ModeIndex, amplitude: f64 },
    /// Random admissible field with `‖∇u₀‖₂ = grad_norm`.
    Random {
        seed: u64,
        stream: u64,
        grad_norm: f64,
    },
    Snapshot(PathBuf),
    /// A base recipe plus random admissible noise of gradient norm `noise`.
    Perturbed {
        base: Box<InitialData>,
        seed: u64,
        noise: f64,
    },
}

impl InitialData {
    pub fn build(&self, trunc: Truncation) -> Result<SpectralField> {
        match self {
            InitialData::SinX2 { l2, amplitude } => {
                SpectralField::from_modes(trunc, &[(ModeIndex::new(0, *l2)?, PI * amplitude)])
            }
            InitialData::Mode { mode, amplitude } => {
                if !mode.is_admissible() {
                    return Err(Error::config(format!(
                        "initial mode ({}, {}) is not admissible",
                        mode.l1, mode.l2
                    )));
                }
                SpectralField::from_modes(trunc, &[(*mode, *amplitude)])
            }
            InitialData::Random {
                seed,
                stream,
                grad_norm,
            } => Ok(random_admissible(trunc, *seed, *stream, *grad_norm)),
            InitialData::Snapshot(path) => {
                let u = snapshot::read(path)?;
                trunc.ensure_same_modes(u.trunc())?;
                SpectralField::from_flat(trunc, &u.to_flat())
            }
            InitialData::Perturbed { base, seed, noise } => {
                let mut u = base.build(trunc)?;
                let n = rescale_to_grad_norm(&random_admissible(trunc, *seed, 1, 1.0), *noise);
                u.add_scaled(1.0, &n);
                Ok(u)
            }
        }
    }

    fn from_config(cfg: &InitialConfig) -> Result<Self> {
        Ok(match cfg {
            InitialConfig::SinX2 => InitialData::SinX2 {
                l2: 1,
                amplitude: 1.0,
            },
            InitialConfig::Mode { l1, l2, amplitude } => InitialData::Mode {
                mode: ModeIndex::new(*l1, *l2)?,
                amplitude: *amplitude,
            },
            InitialConfig::Random {
                seed,
                stream,
                grad_norm,
            } => InitialData::Random {
                seed: *seed,
                stream: *stream,
                grad_norm: *grad_norm,
            },
            InitialConfig::Snapshot { path } => InitialData::Snapshot(path.into()),
        })
    }
}

/// A pass/fail criterion evaluated on a finished (or diverged) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CheckSpec {
    /// `sup|u(t) − e^{rate·t} sin(x₂)| / e^{rate·t} ≤ tol` at every step.
    ClosedFormDrift { rate: f64, tol: f64 },
    /// Fitted growth rate of `log‖u‖₂` within `tol` of `expected`.
    GrowthRate { expected: f64, tol: f64 },
    /// `‖u(t)‖₂² ≤ (1 + tol)·e^{−ωt}‖u₀‖₂²` at every probe.
    DecayEnvelope { omega: f64, tol: f64 },
    /// `‖u(t)‖₂ ≤ threshold` at every probe with `t ≥ by`.
    DecayBelow { threshold: f64, by: f64 },
    /// `‖Δu(t)‖₂ ≤ r_star` at every probe with `t ≥ settle`.
    AbsorbingBall { r_star: f64, settle: f64 },
    /// Coefficients on `l1 ≠ 0` stay below `tol` at every probe.
    X1Invariance { tol: f64 },
    /// The run must hit the blow-up guard before `t_end`.
    ReachesGuard,
    /// Pseudo-spectral and tensor-oracle trajectories differ by at most `tol`
    /// in any coefficient at every step.
    OracleDiscrepancy { tol: f64 },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::ClosedFormDrift { .. } => "closed-form-drift",
            CheckSpec::GrowthRate { .. } => "growth-rate",
            CheckSpec::DecayEnvelope { .. } => "decay-envelope",
            CheckSpec::DecayBelow { .. } => "decay-below",
            CheckSpec::AbsorbingBall { .. } => "absorbing-ball",
            CheckSpec::X1Invariance { .. } => "x1-invariance",
            CheckSpec::ReachesGuard => "reaches-guard",
            CheckSpec::OracleDiscrepancy { .. } => "oracle-discrepancy",
        }
    }
}

/// One run: initial data, parameters, forcing, stepping and checks.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub trunc: Truncation,
    pub initial: InitialData,
    pub forcing: ForcingSpec,
    pub stepper: StepperConfig,
    pub probe_every: u64,
    pub checks: Vec<CheckSpec>,
    /// Checks are reported but do not decide pass/fail.
    pub exploratory: bool,
    /// Hitting the blow-up guard is part of the experiment, not a failure.
    pub expect_divergence: bool,
}

/// Steady-state closed-form runs accumulate only rounding; anything else
/// carries the time-stepping error of the scheme.
const STEADY_DRIFT_TOL: f64 = 1e-8;
const TRANSIENT_DRIFT_TOL: f64 = 1e-5;
const RATE_TOL: f64 = 1e-3;
const ENVELOPE_TOL: f64 = 0.01;
const INVARIANCE_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-7;
const DECAY_THRESHOLD: f64 = 1e-6;
const SETTLE_TIME: f64 = 50.0;
const PROBE_EVERY: u64 = 10;

fn explicit_default_trunc() -> Truncation {
    Truncation::new(16, 16).expect("valid truncation")
}

/// `u₀ = sin(x₂)`, `K = 0`: the solution is `e^{(α−μ)t} sin(x₂)` exactly.
pub fn scenario_explicit_solution(p: ModelParams) -> Scenario {
    let rate = p.alpha - p.mu;
    let drift_tol = if rate == 0.0 {
        STEADY_DRIFT_TOL
    } else {
        TRANSIENT_DRIFT_TOL
    };
    Scenario {
        name: "explicit-solution".into(),
        params: p,
        trunc: explicit_default_trunc(),
        initial: InitialData::SinX2 {
            l2: 1,
            amplitude: 1.0,
        },
        forcing: ForcingSpec::Zero,
        stepper: StepperConfig::new(Scheme::Cnab2, 1e-3, 10.0).expect("valid stepper"),
        probe_every: PROBE_EVERY,
        checks: vec![
            CheckSpec::ClosedFormDrift {
                rate,
                tol: drift_tol,
            },
            CheckSpec::GrowthRate {
                expected: rate,
                tol: RATE_TOL,
            },
        ],
        exploratory: false,
        expect_divergence: false,
    }
}

/// One run per radius from random data with `‖∇u₀‖₂ = r`. Requires the
/// attractor regime. With `K = 0` each run also carries the decay envelope
/// and a decay threshold at `t_end`.
pub fn scenario_attractor_absorption(
    p: ModelParams,
    seed: u64,
    radii: &[f64],
    forcing: ForcingSpec,
) -> Result<Vec<Scenario>> {
    let verdict = classify_regime(&p);
    if verdict.label != RegimeLabel::AttractorRegime {
        return Err(Error::config(format!(
            "attractor-absorption requires the attractor regime (omega > 0); got omega = {:.6} ({})",
            verdict.omega, verdict.label
        )));
    }
    let trunc = Truncation::new(32, 32)?;
    let stepper = StepperConfig::new(Scheme::Cnab2, 1e-2, 80.0)?;
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::config(format!("radius {r} must be finite and non-negative")));
            }
            let mut checks = Vec::new();
            if forcing.is_zero() {
                checks.push(CheckSpec::DecayEnvelope {
                    omega: verdict.omega,
                    tol: ENVELOPE_TOL,
                });
                checks.push(CheckSpec::DecayBelow {
                    threshold: DECAY_THRESHOLD,
                    by: stepper.t_end,
                });
            }
            Ok(Scenario {
                name: format!("run{i}-radius-{r}"),
                params: p,
                trunc,
                initial: InitialData::Random {
                    seed,
                    stream: i as u64,
                    grad_norm: r,
                },
                forcing: forcing.clone(),
                stepper,
                probe_every: PROBE_EVERY,
                checks,
                exploratory: false,
                expect_divergence: false,
            })
        })
        .collect()
}

/// `u₀ = sin(l2*·x₂)` grows at `α − μ·(l2*)²` inside the invariant
/// `x₁`-independent subspace until it hits the blow-up guard.
pub fn scenario_growup(p: ModelParams, l2_star: i32) -> Result<Scenario> {
    let mode = ModeIndex::new(0, l2_star)?;
    let rate = p.alpha - p.mu * (l2_star * l2_star) as f64;
    if !(rate > 0.0) {
        return Err(Error::config(format!(
            "growup requires alpha > mu·l2*² = {} (alpha = {})",
            p.mu * (l2_star * l2_star) as f64,
            p.alpha
        )));
    }
    let verdict = classify_regime(&p);
    debug_assert_eq!(verdict.label, RegimeLabel::GrowUpCandidate);
    Ok(Scenario {
        name: "growup".into(),
        params: p,
        trunc: explicit_default_trunc(),
        initial: InitialData::SinX2 {
            l2: mode.l2,
            amplitude: 1.0,
        },
        forcing: ForcingSpec::Zero,
        stepper: StepperConfig::new(Scheme::Cnab2, 1e-3, 100.0)?,
        probe_every: PROBE_EVERY,
        checks: vec![
            CheckSpec::GrowthRate {
                expected: rate,
                tol: RATE_TOL,
            },
            CheckSpec::X1Invariance {
                tol: INVARIANCE_TOL,
            },
            CheckSpec::ReachesGuard,
        ],
        exploratory: false,
        expect_divergence: true,
    })
}

/// Integrate one random state with both right-hand sides in lockstep.
pub fn scenario_oracle_crosscheck(seed: u64) -> Scenario {
    let trunc = Truncation::new(4, 4).expect("valid truncation");
    Scenario {
        name: "oracle-crosscheck".into(),
        params: ModelParams::new(1.0, 0.0, 0.25).expect("valid params"),
        trunc,
        initial: InitialData::Random {
            seed,
            stream: 0,
            grad_norm: 1.0,
        },
        forcing: ForcingSpec::Zero,
        stepper: StepperConfig::new(Scheme::Cnab2, 1e-3, 1.0).expect("valid stepper"),
        probe_every: PROBE_EVERY,
        checks: vec![CheckSpec::OracleDiscrepancy { tol: ORACLE_TOL }],
        exploratory: false,
        expect_divergence: false,
    }
}

/// A named collection of independent runs.
#[derive(Clone, Debug)]
pub struct Suite {
    pub name: String,
    pub kind: ScenarioKind,
    pub regime: RegimeVerdict,
    /// The fully merged configuration the suite was built from.
    pub config: ScenarioConfig,
    pub members: Vec<Scenario>,
}

impl Suite {
    /// Build a suite, checking every precondition before any compute.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Suite> {
        let kind: ScenarioKind = cfg.scenario.parse()?;
        let defaults = match kind {
            ScenarioKind::ExplicitSolution => (1.0, 0.0, 0.0),
            ScenarioKind::AttractorAbsorption => (1.0, 0.0, 0.25),
            ScenarioKind::Growup => (1.0, 1.5, 0.0),
            ScenarioKind::OracleCrosscheck => (1.0, 0.0, 0.25),
        };
        let p = ModelParams::new(
            cfg.mu.unwrap_or(defaults.0),
            cfg.alpha.unwrap_or(defaults.1),
            cfg.beta.unwrap_or(defaults.2),
        )?;
        let seed = cfg.seed.unwrap_or(0);
        let forcing_cfg = cfg.forcing.clone().unwrap_or(ForcingConfig::Zero);

        let mut members = match kind {
            ScenarioKind::ExplicitSolution => {
                reject_initial(cfg, kind)?;
                reject_forcing(&forcing_cfg, kind)?;
                vec![scenario_explicit_solution(p)]
            }
            ScenarioKind::AttractorAbsorption => {
                reject_initial(cfg, kind)?;
                let trunc = resolve_trunc(cfg, Truncation::new(32, 32)?)?;
                let forcing = forcing_cfg.resolve(trunc)?;
                let radii = cfg.radii.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
                scenario_attractor_absorption(p, seed, &radii, forcing)?
            }
            ScenarioKind::Growup => {
                reject_initial(cfg, kind)?;
                reject_forcing(&forcing_cfg, kind)?;
                let mut s = scenario_growup(p, cfg.mode_l2.unwrap_or(1))?;
                if let Some(noise) = cfg.noise.filter(|&n| n != 0.0) {
                    if !(noise > 0.0) || !noise.is_finite() {
                        return Err(Error::config("noise must be finite and non-negative"));
                    }
                    s.initial = InitialData::Perturbed {
                        base: Box::new(s.initial),
                        seed,
                        noise,
                    };
                    s.exploratory = true;
                }
                vec![s]
            }
            ScenarioKind::OracleCrosscheck => {
                let mut s = scenario_oracle_crosscheck(seed);
                s.params = p;
                s.trunc = resolve_trunc(cfg, s.trunc)?;
                let modes = mode_set(&s.trunc).len();
                if modes > DEFAULT_TENSOR_CAP {
                    return Err(Error::config(format!(
                        "oracle-crosscheck needs at most {DEFAULT_TENSOR_CAP} admissible modes, truncation has {modes}"
                    )));
                }
                s.forcing = forcing_cfg.resolve(s.trunc)?;
                if let Some(init) = &cfg.initial {
                    s.initial = InitialData::from_config(init)?;
                }
                vec![s]
            }
        };

        for s in &mut members {
            apply_overrides(cfg, s)?;
        }
        let name = cfg.name.clone().unwrap_or_else(|| kind.as_str().to_string());
        if members.len() == 1 && kind != ScenarioKind::AttractorAbsorption {
            members[0].name = name.clone();
        }
        let mut names: Vec<&str> = members.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::config(format!("duplicate run name '{}'", w[0])));
        }
        Ok(Suite {
            name,
            kind,
            regime: classify_regime(&p),
            config: cfg.clone(),
            members,
        })
    }
}

fn reject_initial(cfg: &ScenarioConfig, kind: ScenarioKind) -> Result<()> {
    if cfg.initial.is_some() {
        return Err(Error::config(format!(
            "`initial` cannot be set for scenario {kind}; its initial data is fixed"
        )));
    }
    Ok(())
}

fn reject_forcing(forcing: &ForcingConfig, kind: ScenarioKind) -> Result<()> {
    if *forcing != ForcingConfig::Zero {
        return Err(Error::config(format!(
            "scenario {kind} is defined for zero forcing only"
        )));
    }
    Ok(())
}

fn resolve_trunc(cfg: &ScenarioConfig, default: Truncation) -> Result<Truncation> {
    let n1 = cfg.n1.unwrap_or(default.n1);
    let n2 = cfg.n2.unwrap_or(default.n2);
    let base = Truncation::new(n1, n2)?;
    Truncation::with_grid(
        n1,
        n2,
        cfg.grid_m1.unwrap_or(base.grid_m1),
        cfg.grid_m2.unwrap_or(base.grid_m2),
    )
}

/// Apply the generic keys (truncation, stepping, probes, tolerances) on top
/// of a builder's defaults.
fn apply_overrides(cfg: &ScenarioConfig, s: &mut Scenario) -> Result<()> {
    s.trunc = resolve_trunc(cfg, s.trunc)?;
    if let Some(k) = s.forcing.at(0.0) {
        if !k.trunc().same_modes(&s.trunc) {
            return Err(Error::config("forcing truncation differs from the run truncation"));
        }
    }
    s.stepper = StepperConfig::new(
        cfg.scheme.unwrap_or(s.stepper.scheme),
        cfg.dt.unwrap_or(s.stepper.dt),
        cfg.t_end.unwrap_or(s.stepper.t_end),
    )?;
    if let Some(every) = cfg.probe_every {
        if every == 0 {
            return Err(Error::config("probe_every must be at least 1"));
        }
        s.probe_every = every;
    }
    let t_end = s.stepper.t_end;
    for check in &mut s.checks {
        match check {
            CheckSpec::ClosedFormDrift { tol, .. } => *tol = cfg.drift_tol.unwrap_or(*tol),
            CheckSpec::GrowthRate { tol, .. } => *tol = cfg.rate_tol.unwrap_or(*tol),
            CheckSpec::DecayEnvelope { tol, .. } => *tol = cfg.envelope_tol.unwrap_or(*tol),
            CheckSpec::DecayBelow { threshold, by } => {
                *threshold = cfg.decay_threshold.unwrap_or(*threshold);
                *by = cfg.decay_by.unwrap_or(t_end);
            }
            CheckSpec::X1Invariance { tol } => *tol = cfg.invariance_tol.unwrap_or(*tol),
            CheckSpec::OracleDiscrepancy { tol } => *tol = cfg.oracle_tol.unwrap_or(*tol),
            CheckSpec::AbsorbingBall { .. } | CheckSpec::ReachesGuard => {}
        }
    }
    if cfg.decay_threshold.is_some() && !s.checks.iter().any(|c| matches!(c, CheckSpec::DecayBelow { .. })) {
        s.checks.push(CheckSpec::DecayBelow {
            threshold: cfg.decay_threshold.unwrap_or(DECAY_THRESHOLD),
            by: cfg.decay_by.unwrap_or(t_end),
        });
    }
    if let Some(r_star) = cfg.r_star {
        if !(r_star > 0.0) {
            return Err(Error::config("r_star must be positive"));
        }
        s.checks.push(CheckSpec::AbsorbingBall {
            r_star,
            settle: cfg.settle_time.unwrap_or(SETTLE_TIME),
        });
    }
    Ok(())
}
