//! Scenario runner: reads a JSON configuration or a named preset, runs the
//! pipeline in parallel and writes CSV tables, a summary with pass/fail per
//! check, and a manifest with content digests.

pub mod config;
pub mod presets;
pub mod report;
pub mod scenarios;

use std::path::Path;

use config::ScenarioConfig;
use report::Report;

/// Exit status when every check passed.
pub const EXIT_OK: i32 = 0;
/// Exit status when a numeric check failed.
pub const EXIT_FAILED_CHECKS: i32 = 2;
/// Exit status when the configuration is invalid or outputs cannot be written.
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("cannot write outputs: {0:#}")]
    Output(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INVALID
    }
}

/// Validates `cfg`, runs its scenario on a pool of `cfg.threads` workers
/// (all cores when unset) and writes the report bundle to `cfg.out_dir`.
/// Relative coefficient files resolve against `base`.
pub fn run_scenario(cfg: &ScenarioConfig, base: &Path) -> Result<Report, RunError> {
    let errs = cfg.validate(base);
    if !errs.is_empty() {
        return Err(RunError::Invalid(errs));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Output(e.into()))?;
    let mut report = Report::default();
    pool.install(|| scenarios::run(cfg, base, &mut report));
    report.write(&cfg.out_dir, cfg).map_err(RunError::Output)?;
    Ok(report)
}

pub fn exit_code(report: &Report) -> i32 {
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_FAILED_CHECKS
    }
}
