use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `limit`, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    pub detail: String,
}

/// Collects the tables and checks of one run. Stages that fail record a
/// failed check and leave whatever they had already produced in place.
#[derive(Debug, Default)]
pub struct Report {
    files: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
    /// Scalar results worth surfacing in the summary.
    pub findings: BTreeMap<String, Value>,
}

impl Report {
    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            value: None,
            limit: None,
            detail: detail.into(),
        });
    }

    /// Passes when `value <= limit`.
    pub fn at_most(&mut self, name: &str, value: f64, limit: f64, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
            detail: detail.into(),
        });
    }

    /// Passes when `value >= limit`.
    pub fn at_least(&mut self, name: &str, value: f64, limit: f64, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed: value >= limit,
            value: Some(value),
            limit: Some(limit),
            detail: detail.into(),
        });
    }

    pub fn finding(&mut self, key: &str, value: impl Serialize) {
        self.findings
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn table(&mut self, name: &str, body: Vec<u8>) {
        self.files.push((name.to_string(), body));
    }

    /// Runs `f`, turning an error into a failed check named after the stage.
    pub fn stage(&mut self, name: &str, f: impl FnOnce(&mut Report) -> anyhow::Result<()>) {
        if let Err(e) = f(self) {
            self.check(name, false, format!("stage aborted: {e:#}"));
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes the tables, `summary.json` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, config: &ScenarioConfig) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        let summary = serde_json::json!({
            "scenario": config.kind.name(),
            "passed": self.all_passed(),
            "checks": self.checks,
            "findings": self.findings,
        });
        let mut outputs: Vec<(&str, Vec<u8>)> =
            self.files.iter().map(|(n, b)| (n.as_str(), b.clone())).collect();
        outputs.push(("summary.json", serde_json::to_vec_pretty(&summary)?));
        let mut listed = Vec::new();
        for (name, body) in &outputs {
            fs::write(dir.join(name), body)?;
            listed.push(serde_json::json!({
                "path": name,
                "sha256": hex::encode(Sha256::digest(body)),
            }));
        }
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let manifest = serde_json::json!({
            "config": config,
            "seed": config.seed,
            "versions": {
                "krein": env!("CARGO_PKG_VERSION"),
                "krein-core": krein_core::VERSION,
            },
            "timestamp_unix": timestamp,
            "files": listed,
        });
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }
}

/// CSV text built row by row with a fixed header.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            body: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        self.body.push_str(&line.join(","));
        self.body.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.body.into_bytes()
    }
}
