//! Named, reproducible verification scenarios and their reports.

mod suite;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ode::IntegratorSettings;

pub use suite::{ANCHORS, SCENARIOS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Pass,
    ExpectedFail,
    /// Recorded without a verdict.
    Measured,
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expectation::Pass => "pass",
            Expectation::ExpectedFail => "expected-fail",
            Expectation::Measured => "measured",
        })
    }
}

/// How a measured value is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Above,
    Equals,
}

impl Relation {
    pub fn holds(self, measured: f64, tol: f64) -> bool {
        match self {
            Relation::AtMost => measured <= tol,
            Relation::AtLeast => measured >= tol,
            Relation::Above => measured > tol,
            Relation::Equals => measured == tol,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
            Relation::Equals => "==",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    /// Non-finite values serialize as `null` and read back as NaN.
    #[serde(deserialize_with = "null_as_nan")]
    pub measured: f64,
    /// Absent for measured-only records.
    pub tolerance: Option<f64>,
    pub relation: Relation,
    pub expectation: Expectation,
    /// The relation holds.
    pub passed: bool,
    /// The outcome matches the expectation.
    pub ok: bool,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Tabular data for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Payload {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub samples: usize,
    pub step: f64,
    pub steps: usize,
    pub tol_scale: f64,
    pub backend: String,
    pub sampler: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub anchor: String,
    pub description: String,
    pub expectation: Expectation,
    pub environment: Environment,
    /// Sorted by id.
    pub checks: Vec<CheckRecord>,
    pub payloads: Vec<Payload>,
    pub ok: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall time zeroed, for comparing runs.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        r.to_json()
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("scenario,id,anchor,measured,relation,tolerance,expectation,passed,ok\n");
        for c in &self.checks {
            let tol = c.tolerance.map_or(String::new(), |t| format!("{t:e}"));
            out.push_str(&format!(
                "{},{},\"{}\",{:e},{},{},{},{},{}\n",
                self.scenario, c.id, c.anchor, c.measured, c.relation, tol, c.expectation, c.passed, c.ok
            ));
        }
        out
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Run-time knobs shared by all scenarios.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// RK4 step size on the unit path interval.
    pub step: Option<f64>,
    pub tol_scale: Option<f64>,
}

pub const OVERRIDE_KEYS: [&str; 4] = ["samples", "seed", "step", "tol_scale"];

impl Overrides {
    /// Parses a JSON object with keys from [`OVERRIDE_KEYS`].
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::InvalidOverride {
            key: format!("<document: {e}>"),
            valid: OVERRIDE_KEYS.join(", "),
        })?;
        let Value::Object(map) = v else {
            return Err(Error::InvalidOverride {
                key: "<document is not an object>".into(),
                valid: OVERRIDE_KEYS.join(", "),
            });
        };
        Self::from_map(&map)
    }

    fn from_map(map: &Map<String, Value>) -> Result<Self> {
        let bad = |key: &str| Error::InvalidOverride {
            key: key.to_string(),
            valid: OVERRIDE_KEYS.join(", "),
        };
        let mut o = Overrides::default();
        for (k, v) in map {
            match k.as_str() {
                "samples" => o.samples = Some(v.as_u64().ok_or_else(|| bad(k))? as usize),
                "seed" => o.seed = Some(v.as_u64().ok_or_else(|| bad(k))?),
                "step" => o.step = Some(v.as_f64().ok_or_else(|| bad(k))?),
                "tol_scale" => o.tol_scale = Some(v.as_f64().ok_or_else(|| bad(k))?),
                _ => return Err(bad(k)),
            }
        }
        o.validate()?;
        Ok(o)
    }

    /// Values from `other` win.
    pub fn merged(&self, other: &Overrides) -> Overrides {
        Overrides {
            samples: other.samples.or(self.samples),
            seed: other.seed.or(self.seed),
            step: other.step.or(self.step),
            tol_scale: other.tol_scale.or(self.tol_scale),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Error::InvalidOverride {
            key: format!("{key} ({why})"),
            valid: OVERRIDE_KEYS.join(", "),
        };
        if self.samples == Some(0) {
            return Err(bad("samples", "must be positive"));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h <= 1.0) {
                return Err(bad("step", "must lie in (0, 1]"));
            }
        }
        if let Some(s) = self.tol_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(bad("tol_scale", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Resolved settings handed to a scenario body.
#[derive(Clone, Debug, PartialEq)]
pub struct Ctx {
    pub seed: u64,
    pub samples: usize,
    pub steps: usize,
    pub tol_scale: f64,
}

impl Ctx {
    pub fn settings(&self) -> IntegratorSettings {
        IntegratorSettings::with_steps(self.steps)
    }
}

/// Collects check records and payloads while a scenario runs.
#[derive(Debug)]
pub struct Recorder {
    anchor: String,
    tol_scale: f64,
    checks: Vec<CheckRecord>,
    payloads: Vec<Payload>,
}

impl Recorder {
    fn new(anchor: &str, tol_scale: f64) -> Self {
        Recorder {
            anchor: anchor.to_string(),
            tol_scale,
            checks: Vec::new(),
            payloads: Vec::new(),
        }
    }

    fn push(&mut self, id: &str, anchor: Option<&str>, measured: f64, relation: Relation, tol: Option<f64>, expectation: Expectation) {
        assert!(
            self.checks.iter().all(|c| c.id != id),
            "duplicate check id `{id}`"
        );
        // only upper bounds loosen with the tolerance scale
        let tolerance = tol.map(|t| if relation == Relation::AtMost { t * self.tol_scale } else { t });
        let passed = tolerance.is_none_or(|t| relation.holds(measured, t));
        let ok = match expectation {
            Expectation::Pass => passed,
            Expectation::ExpectedFail => !passed,
            Expectation::Measured => true,
        };
        self.checks.push(CheckRecord {
            id: id.to_string(),
            anchor: anchor.unwrap_or(&self.anchor).to_string(),
            measured,
            tolerance,
            relation,
            expectation,
            passed,
            ok,
        });
    }

    pub fn check(&mut self, id: &str, measured: f64, relation: Relation, tol: f64) {
        self.push(id, None, measured, relation, Some(tol), Expectation::Pass);
    }

    pub fn check_at(&mut self, id: &str, anchor: &str, measured: f64, relation: Relation, tol: f64) {
        self.push(id, Some(anchor), measured, relation, Some(tol), Expectation::Pass);
    }

    pub fn flag(&mut self, id: &str, holds: bool) {
        self.check(id, f64::from(u8::from(holds)), Relation::Equals, 1.0);
    }

    pub fn expect_fail(&mut self, id: &str, measured: f64, relation: Relation, tol: f64) {
        self.push(id, None, measured, relation, Some(tol), Expectation::ExpectedFail);
    }

    pub fn measure(&mut self, id: &str, value: f64) {
        self.push(id, None, value, Relation::AtMost, None, Expectation::Measured);
    }

    pub fn payload(&mut self, name: &str, columns: Vec<String>, rows: Vec<Vec<f64>>) {
        self.payloads.push(Payload {
            name: name.to_string(),
            columns,
            rows,
        });
    }
}

pub type ScenarioBody = fn(&Ctx, &mut Recorder) -> Result<()>;

pub struct ScenarioSpec {
    pub name: &'static str,
    pub anchor: &'static str,
    pub description: &'static str,
    pub expectation: Expectation,
    pub default_samples: usize,
    pub default_steps: usize,
    pub body: ScenarioBody,
}

impl fmt::Debug for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioSpec")
            .field("name", &self.name)
            .field("anchor", &self.anchor)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub name: String,
    pub anchor: String,
    pub description: String,
    pub expectation: Expectation,
}

/// Registry dump in registration order.
pub fn list_scenarios() -> Vec<ScenarioRow> {
    SCENARIOS
        .iter()
        .map(|s| ScenarioRow {
            name: s.name.to_string(),
            anchor: s.anchor.to_string(),
            description: s.description.to_string(),
            expectation: s.expectation,
        })
        .collect()
}

/// Rows whose anchor contains `needle` (case-insensitive).
pub fn filter_by_anchor(needle: &str) -> Vec<ScenarioRow> {
    let n = needle.to_lowercase();
    list_scenarios()
        .into_iter()
        .filter(|r| r.anchor.to_lowercase().contains(&n))
        .collect()
}

pub fn find_scenario(name: &str) -> Result<&'static ScenarioSpec> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Registry sanity: unique names, anchors that resolve.
pub fn registry_problems() -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut problems = Vec::new();
    for s in SCENARIOS {
        if !seen.insert(s.name) {
            problems.push(format!("duplicate scenario `{}`", s.name));
        }
        if s.anchor.is_empty() || !ANCHORS.iter().any(|(a, _)| *a == s.anchor) {
            problems.push(format!("scenario `{}` has unresolved anchor `{}`", s.name, s.anchor));
        }
    }
    problems
}

pub fn run_scenario(name: &str, overrides: &Overrides) -> Result<Report> {
    let spec = find_scenario(name)?;
    overrides.validate()?;
    let steps = match overrides.step {
        Some(h) => ((1.0 / h).round() as usize).max(1),
        None => spec.default_steps,
    };
    let ctx = Ctx {
        seed: overrides.seed.unwrap_or(0),
        samples: overrides.samples.unwrap_or(spec.default_samples),
        steps,
        tol_scale: overrides.tol_scale.unwrap_or(1.0),
    };
    let start = Instant::now();
    let mut rec = Recorder::new(spec.anchor, ctx.tol_scale);
    (spec.body)(&ctx, &mut rec)?;
    let mut checks = rec.checks;
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    let ok = checks.iter().all(|c| c.ok);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        scenario: spec.name.to_string(),
        anchor: spec.anchor.to_string(),
        description: spec.description.to_string(),
        expectation: spec.expectation,
        environment: Environment {
            seed: ctx.seed,
            samples: ctx.samples,
            step: 1.0 / ctx.steps as f64,
            steps: ctx.steps,
            tol_scale: ctx.tol_scale,
            backend: "dual".to_string(),
            sampler: "halton".to_string(),
        },
        checks,
        payloads: rec.payloads,
        ok,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Writes one CSV per payload into `dir`; returns the paths written.
pub fn export_plotdata(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.payloads.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for p in &report.payloads {
        let path = dir.join(format!("{}-{}.csv", report.scenario, p.name));
        fs::write(&path, p.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
