//! Run-directory files: the diagnostics CSV and the JSON report.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{DiagnosticSample, RegimeVerdict};
use crate::fsutil::write_atomic;
use crate::Result;

use super::runner::{MemberOutcome, SuiteOutcome};
use super::ScenarioConfig;

/// First line of every diagnostics file; bump when columns change.
pub const CSV_VERSION_LINE: &str = "# glory-diagnostics v1";
pub const CSV_HEADER: &str = "run,step,t,l2_norm_sq,grad_norm_sq,lap_norm_sq,d1_norm_sq,d2_norm_sq,energy_residual,x1_dependent_max";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per sample, runs in suite order. Floats use the shortest
/// representation that round-trips, so equal runs give equal bytes.
pub fn diagnostics_csv<'a>(runs: impl IntoIterator<Item = (&'a str, &'a [DiagnosticSample])>) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (name, samples) in runs {
        let name = csv_field(name);
        for s in samples {
            let residual = s.energy_residual.map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{},{},{residual},{}",
                s.step,
                s.t,
                s.l2_norm_sq,
                s.grad_norm_sq,
                s.lap_norm_sq,
                s.d1_norm_sq,
                s.d2_norm_sq,
                s.x1_dependent_max
            );
        }
    }
    out
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    suite: &'a str,
    scenario: &'a str,
    regime: &'a RegimeVerdict,
    all_pass: bool,
    unexpected_divergence: bool,
    config: &'a ScenarioConfig,
    members: &'a [MemberOutcome],
}

pub(crate) fn report_json(outcome: &SuiteOutcome) -> Result<Vec<u8>> {
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        suite: &outcome.name,
        scenario: outcome.kind.as_str(),
        regime: &outcome.regime,
        all_pass: outcome.all_pass(),
        unexpected_divergence: outcome.unexpected_divergence(),
        config: &outcome.config,
        members: &outcome.members,
    };
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub(crate) fn write_outputs(dir: &Path, outcome: &SuiteOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = diagnostics_csv(
        outcome
            .members
            .iter()
            .map(|m| (m.name.as_str(), m.record.samples.as_slice())),
    );
    write_atomic(&dir.join("diagnostics.csv"), csv.as_bytes())?;
    write_atomic(&dir.join("report.json"), &report_json(outcome)?)
}
