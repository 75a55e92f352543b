//! Report schema.
//!
//! A scenario report has `scenario`, `kind`, `verdict`, an optional
//! `description`, the `policy` echo (`seed`, `samples`, `tolerance`), an
//! optional `timing_ms`, the `input` objects as written and one `checks`
//! entry per check with `name`, `verdict`, an optional `witness` and a table
//! of `facts`. Verdicts are `pass`, `fail` or `FALSIFICATION`.
//!
//! A suite report has a `summary` table, the per-scenario `reports` sorted
//! by name and the per-file input `errors`.

use std::collections::BTreeMap;
use std::fmt;

use homogeom::exprcore::ZeroTestPolicy;
use serde::Serialize;

use crate::scenario::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "FALSIFICATION")]
    Falsification,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Falsification => "FALSIFICATION",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Fact {
    Bool(bool),
    Int(i64),
    Text(String),
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Bool(b) => write!(f, "{b}"),
            Fact::Int(i) => write!(f, "{i}"),
            Fact::Text(s) => write!(f, "\"{s}\""),
        }
    }
}

impl From<bool> for Fact {
    fn from(b: bool) -> Self {
        Fact::Bool(b)
    }
}
impl From<usize> for Fact {
    fn from(i: usize) -> Self {
        Fact::Int(i as i64)
    }
}
impl From<String> for Fact {
    fn from(s: String) -> Self {
        Fact::Text(s)
    }
}
impl From<&str> for Fact {
    fn from(s: &str) -> Self {
        Fact::Text(s.to_string())
    }
}
/// Undecided verdicts become the text "undecided".
impl From<Option<bool>> for Fact {
    fn from(b: Option<bool>) -> Self {
        b.map_or(Fact::Text("undecided".into()), Fact::Bool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub facts: BTreeMap<String, Fact>,
}

impl Check {
    pub fn new(name: &str) -> Self {
        Check { name: name.to_string(), verdict: Verdict::Pass, witness: None, facts: BTreeMap::new() }
    }
    pub fn fact(mut self, key: &str, v: impl Into<Fact>) -> Self {
        self.facts.insert(key.to_string(), v.into());
        self
    }
    /// Fails the check unless `ok`.
    pub fn require(mut self, ok: bool) -> Self {
        if !ok {
            self.verdict = self.verdict.max(Verdict::Fail);
        }
        self
    }
    /// Marks a violated equivalence unless `ok`.
    pub fn equivalence(mut self, ok: bool) -> Self {
        if !ok {
            self.verdict = Verdict::Falsification;
        }
        self
    }
    pub fn witness(mut self, w: Option<String>) -> Self {
        if self.witness.is_none() {
            self.witness = w;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyEcho {
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
}

impl From<&ZeroTestPolicy> for PolicyEcho {
    fn from(p: &ZeroTestPolicy) -> Self {
        PolicyEcho { seed: p.seed, samples: p.sample_count, tolerance: p.tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub kind: Kind,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
    pub policy: PolicyEcho,
    pub input: toml::Table,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn falsifications(&self) -> usize {
        self.checks.iter().filter(|c| c.verdict == Verdict::Falsification).count()
    }
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileError {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub scenarios: usize,
    pub passed: usize,
    pub failed: usize,
    pub falsified: usize,
    pub falsification_events: usize,
    pub input_errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub summary: Summary,
    pub reports: Vec<Report>,
    pub errors: Vec<FileError>,
}

impl SuiteReport {
    pub fn new(mut reports: Vec<Report>, mut errors: Vec<FileError>) -> Self {
        reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
        errors.sort_by(|a, b| a.file.cmp(&b.file));
        let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
        let summary = Summary {
            scenarios: reports.len(),
            passed: count(Verdict::Pass),
            failed: count(Verdict::Fail),
            falsified: count(Verdict::Falsification),
            falsification_events: reports.iter().map(Report::falsifications).sum(),
            input_errors: errors.len(),
            timing_ms: None,
        };
        SuiteReport { summary, reports, errors }
    }

    /// 2 on any input error, else 1 on any fail or FALSIFICATION, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.summary.input_errors > 0 {
            2
        } else if self.summary.failed + self.summary.falsified > 0 {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

pub fn render<T: Serialize>(value: &T, format: Format) -> String {
    match format {
        Format::Toml => toml::to_string_pretty(value).expect("reports serialize to TOML"),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
            s.push('\n');
            s
        }
    }
}
