//! Declarative scenario configuration (TOML).
//!
//! Every key is optional except `scenario`; missing values fall back to the
//! defaults of the named scenario. Command-line overrides are expressed as a
//! second `ScenarioConfig` and merged with [`ScenarioConfig::merge`].
//!
//! ```toml
//! scenario = "attractor-absorption"
//! mu = 1.0
//! alpha = 0.0
//! beta = 0.25
//! n1 = 32
//! n2 = 32
//! dt = 0.002
//! t_end = 60.0
//! seed = 7
//! radii = [0.1, 1.0, 10.0]
//! r_star = 0.2
//! settle_time = 50.0
//!
//! [forcing]
//! kind = "constant"
//! l2_norm = 0.1
//! modes = [{ l1 = 0, l2 = 1, value = 1.0 }, { l1 = 1, l2 = 2, value = 1.0 }]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Envelope, ForcingSpec, Scheme};
use crate::spectral::{ModeIndex, SpectralField, Truncation};
use crate::{Error, Result};

/// One coefficient of a field given mode by mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValue {
    pub l1: i32,
    pub l2: i32,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingConfig {
    Zero,
    Constant {
        modes: Vec<ModeValue>,
        /// Rescale the field to this `‖K‖₂` if given.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l2_norm: Option<f64>,
    },
    Modulated {
        modes: Vec<ModeValue>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l2_norm: Option<f64>,
        envelope: Envelope,
    },
}

fn field_from_modes(
    trunc: Truncation,
    modes: &[ModeValue],
    l2_norm: Option<f64>,
) -> Result<SpectralField> {
    let mut field = SpectralField::zeros(trunc);
    for m in modes {
        let mode = ModeIndex::new(m.l1, m.l2)?;
        field.set(mode, field.get(mode) + m.value)?;
    }
    if let Some(target) = l2_norm {
        if !(target >= 0.0) {
            return Err(Error::config("forcing l2_norm must be non-negative"));
        }
        let norm = field.norm_sq().sqrt();
        if norm == 0.0 {
            return Err(Error::config("cannot normalize a zero forcing field"));
        }
        field = field.scaled(target / norm);
    }
    Ok(field)
}

impl ForcingConfig {
    pub fn resolve(&self, trunc: Truncation) -> Result<ForcingSpec> {
        match self {
            ForcingConfig::Zero => Ok(ForcingSpec::Zero),
            ForcingConfig::Constant { modes, l2_norm } => {
                ForcingSpec::constant(field_from_modes(trunc, modes, *l2_norm)?)
            }
            ForcingConfig::Modulated {
                modes,
                l2_norm,
                envelope,
            } => ForcingSpec::modulated(field_from_modes(trunc, modes, *l2_norm)?, *envelope),
        }
    }
}

/// Initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `u₀ = sin(x₂)`.
    SinX2,
    /// `u₀ = amplitude·e_(l1,l2)`.
    Mode { l1: i32, l2: i32, amplitude: f64 },
    /// Random smooth admissible field with `‖∇u₀‖₂ = grad_norm`.
    Random {
        seed: u64,
        #[serde(default)]
        stream: u64,
        grad_norm: f64,
    },
    /// Coefficients from a `.gspc` snapshot.
    Snapshot { path: String },
}

/// Flat scenario description; see the module docs for the file format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario kind: `explicit-solution`, `attractor-absorption`, `growup`
    /// or `oracle-crosscheck`.
    #[serde(default)]
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_m1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_m2: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Diagnostics every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_every: Option<u64>,
    /// Write a field snapshot every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    /// Write a checkpoint every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<u64>,

    /// Grow-up: x2 wavenumber of the initial mode `(0, l2*)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_l2: Option<i32>,
    /// Grow-up: `‖∇·‖₂` of random admissible noise added to the initial mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Attractor absorption: initial `‖∇u₀‖₂` of each member run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Attractor absorption: frozen `‖Δu‖₂` ball radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    /// Attractor absorption: time after which `‖Δu‖₂ ≤ r_star` must hold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_time: Option<f64>,
    /// Require `‖u‖₂ ≤ decay_threshold` from `decay_by` on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_by: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariance_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_tol: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingConfig>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ScenarioConfig {
    pub fn for_scenario(kind: &str) -> Self {
        Self {
            scenario: kind.to_string(),
            ..Self::default()
        }
    }

    /// Parse TOML text; errors carry the line and field of the problem.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if cfg.scenario.is_empty() {
            return Err(Error::config("missing required key `scenario`"));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// Overwrite every field that is set in `over`.
    pub fn merge(&mut self, over: &ScenarioConfig) {
        if !over.scenario.is_empty() {
            self.scenario = over.scenario.clone();
        }
        merge_fields!(self, over;
            name, mu, alpha, beta, n1, n2, grid_m1, grid_m2, scheme, dt, t_end, seed,
            probe_every, snapshot_every, checkpoint_every, mode_l2, noise, radii, r_star,
            settle_time, decay_threshold, decay_by, rate_tol, drift_tol, envelope_tol,
            invariance_tol, oracle_tol, initial, forcing,
        );
    }
}
