//! The randomized identity/inequality suite over many fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Nonlinearity;
use crate::spectral::random::{field_rng, smooth_admissible, smooth_unconstrained};
use crate::spectral::Truncation;
use crate::Result;

use super::inequalities::{calibrate_ladyzhenskaya, Check, InequalityReport, InequalitySuite};

/// Safety factor applied to the searched Ladyzhenskaya ratio.
pub const LADY_SAFETY_FACTOR: f64 = 1.05;
/// Size of the random search for the Ladyzhenskaya constant.
pub const LADY_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub trunc: Truncation,
    pub seed: u64,
    /// Number of random samples; each sample is a `(u, w, z)` triple.
    pub count: usize,
    pub lady_samples: usize,
    pub variant: Nonlinearity,
}

impl VerifyOptions {
    pub fn new(trunc: Truncation, seed: u64, count: usize) -> Self {
        Self {
            trunc,
            seed,
            count,
            lady_samples: LADY_SAMPLES,
            variant: Nonlinearity::Standard,
        }
    }
}

/// Aggregate of one named check over every sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: usize,
    pub failures: usize,
    /// Smallest `1 − lhs/rhs`; negative means violated.
    pub worst_margin: f64,
    /// The evaluation that produced `worst_margin`.
    pub worst: Check,
}

impl CheckSummary {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub count: usize,
    pub seed: u64,
    /// Ladyzhenskaya constant used (after the safety factor).
    pub c_l: Option<f64>,
    pub lady_max_ratio: Option<f64>,
    /// One row per check name, in first-seen order.
    pub rows: Vec<CheckSummary>,
}

impl VerificationSummary {
    /// No samples were evaluated; passes trivially.
    pub fn is_vacuous(&self) -> bool {
        self.count == 0
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(CheckSummary::pass)
    }

    pub fn row(&self, name: &str) -> Option<&CheckSummary> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn margin(c: &Check) -> f64 {
    if c.rhs == 0.0 {
        if c.lhs <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - c.lhs / c.rhs
    }
}

fn sample_report(suite: &InequalitySuite, opts: &VerifyOptions, i: u64) -> Result<InequalityReport> {
    let t = opts.trunc;
    let draw_adm = |k: u64| smooth_admissible(t, &mut field_rng(opts.seed, 4 * i + k));
    let (u, w, z_adm) = (draw_adm(0), draw_adm(1), draw_adm(2));
    let z_free = smooth_unconstrained(t, &mut field_rng(opts.seed, 4 * i + 3));
    let mut report = suite.check_field(&u)?;
    report.extend(suite.check_pair(&u, &w)?);
    report.extend(suite.check_pair(&u, &z_free)?);
    if suite.c_l().is_some() {
        report.extend(suite.check_triple(&u, &w, &z_adm)?);
        report.extend(suite.check_triple(&u, &w, &z_free)?);
    }
    Ok(report)
}

/// Calibrate `c_L` (unless `lady_samples` is 0), then evaluate every check on
/// `count` random samples. Samples use disjoint streams of `seed` and the
/// calibration uses `seed + 1`, so results do not depend on thread count.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerificationSummary> {
    let mut suite = InequalitySuite::with_variant(opts.trunc, opts.variant)?;
    let mut lady_max_ratio = None;
    if opts.lady_samples > 0 && opts.count > 0 {
        let cal = calibrate_ladyzhenskaya(
            opts.trunc,
            opts.seed.wrapping_add(1),
            opts.lady_samples,
            LADY_SAFETY_FACTOR,
        )?;
        lady_max_ratio = Some(cal.max_ratio);
        suite = suite.with_ladyzhenskaya(cal.c_l);
    }
    let reports = (0..opts.count as u64)
        .into_par_iter()
        .map(|i| sample_report(&suite, opts, i))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<CheckSummary> = Vec::new();
    for check in reports.into_iter().flat_map(|r| r.checks) {
        let m = margin(&check);
        let failed = !check.pass;
        match rows.iter_mut().find(|r| r.name == check.name) {
            Some(row) => {
                row.evaluated += 1;
                row.failures += failed as usize;
                if m < row.worst_margin || m.is_nan() {
                    row.worst_margin = m;
                    row.worst = check;
                }
            }
            None => rows.push(CheckSummary {
                name: check.name.clone(),
                evaluated: 1,
                failures: failed as usize,
                worst_margin: m,
                worst: check,
            }),
        }
    }
    Ok(VerificationSummary {
        count: opts.count,
        seed: opts.seed,
        c_l: suite.c_l(),
        lady_max_ratio,
        rows,
    })
}
