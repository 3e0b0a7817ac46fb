//! Checks, verdict reports and the files they are written to.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Below,
    Above,
    Holds,
}

/// One asserted inequality (or boolean) with the value actually observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub relation: Relation,
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn compare(label: &str, relation: Relation, observed: f64, bound: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => observed <= bound,
            Relation::AtLeast => observed >= bound,
            Relation::Below => observed < bound,
            Relation::Above => observed > bound,
            Relation::Holds => observed == 1.0,
        };
        Self { label: label.into(), relation, observed, bound, passed, note: None }
    }

    pub fn at_most(label: &str, observed: f64, bound: f64) -> Self {
        Self::compare(label, Relation::AtMost, observed, bound)
    }

    pub fn at_least(label: &str, observed: f64, bound: f64) -> Self {
        Self::compare(label, Relation::AtLeast, observed, bound)
    }

    pub fn below(label: &str, observed: f64, bound: f64) -> Self {
        Self::compare(label, Relation::Below, observed, bound)
    }

    pub fn above(label: &str, observed: f64, bound: f64) -> Self {
        Self::compare(label, Relation::Above, observed, bound)
    }

    pub fn holds(label: &str, ok: bool) -> Self {
        Self::compare(label, Relation::Holds, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.note = Some(text.into());
        self
    }

    fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let body = match self.relation {
            Relation::Holds => String::new(),
            Relation::AtMost => format!(": {} <= {}", self.observed, self.bound),
            Relation::AtLeast => format!(": {} >= {}", self.observed, self.bound),
            Relation::Below => format!(": {} < {}", self.observed, self.bound),
            Relation::Above => format!(": {} > {}", self.observed, self.bound),
        };
        match &self.note {
            Some(n) => format!("{status} {}{body} ({n})", self.label),
            None => format!("{status} {}{body}", self.label),
        }
    }
}

/// Content of `verdict.json`. Holds no timings or paths, so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub details: Map<String, Value>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Self { command: command.into(), anchor: None, seed, horizon: None, passed: true, checks: Vec::new(), details: Map::new() }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("details serialize");
        self.details.insert(key.into(), v);
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let status = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{} {status} (seed {})", self.command, self.seed);
        if let Some(a) = &self.anchor {
            let _ = writeln!(s, "anchor: {a}");
        }
        if let Some(h) = self.horizon {
            let _ = writeln!(s, "horizon: {h}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "  {}", c.line());
        }
        s
    }
}

/// `j,k_or_t,seminorm,value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitRow {
    pub j: usize,
    pub k_or_t: f64,
    pub seminorm: usize,
    pub value: f64,
}

/// Output directory of one command or scenario.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn csv(&self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let mut body = String::from(header);
        body.push('\n');
        for r in rows {
            body.push_str(&r);
            body.push('\n');
        }
        self.text(name, &body)
    }

    pub fn orbits(&self, rows: &[OrbitRow]) -> Result<(), CliError> {
        self.csv(
            "orbits.csv",
            "j,k_or_t,seminorm,value",
            rows.iter().map(|r| format!("{},{},{},{}", r.j, r.k_or_t, r.seminorm, r.value)),
        )
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).expect("artifacts serialize");
        body.push('\n');
        self.text(name, &body)
    }

    /// `verdict.json` and `summary.txt`.
    pub fn report(&self, report: &Report) -> Result<(), CliError> {
        self.json("verdict.json", report)?;
        self.text("summary.txt", &report.summary())
    }
}
