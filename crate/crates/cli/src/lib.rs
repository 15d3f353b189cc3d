//! Library side of the `qedk` command: configuration, scenarios and output files.

pub mod config;
pub mod output;
pub mod scenario;

use config::ScenarioConfig;
use output::{emit_csv, emit_report, OutputError};
use scenario::{execute, Outcome, RunError};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub const OUT_ENV: &str = "QEDK_OUT";
pub const DEFAULT_OUT: &str = "qedk-out";

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error at {0}")]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Numerics(qedk_core::Error),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Numerics(_) => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        }
    }
}

impl From<RunError> for AppError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => AppError::Config(c),
            RunError::Numerics(n) => AppError::Numerics(n),
        }
    }
}

/// `--out`, then `scenario.output`, then `$QEDK_OUT`, then [`DEFAULT_OUT`].
pub fn output_dir(cfg: &ScenarioConfig, flag: Option<&Path>, env: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs every check and writes series, reports and `summary.json` into `dir`.
pub fn run(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, AppError> {
    let outcome = execute(cfg, true)?;
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.to_path_buf(), source })?;
    for s in &outcome.series {
        emit_csv(s, &dir.join(&s.file))?;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for r in &outcome.reports {
        let n = seen.entry(r.check.as_str()).or_insert(0);
        *n += 1;
        let file = if *n == 1 { format!("{}.json", r.check) } else { format!("{}_{n}.json", r.check) };
        emit_report(r, &dir.join(&file))?;
        entries.push(serde_json::json!({
            "check": r.check, "file": file, "pass": r.pass, "max_residual": r.max_residual, "tolerance": r.tolerance,
        }));
    }
    let summary = serde_json::json!({
        "scenario": cfg.kind.name(),
        "pass": outcome.pass(),
        "series": outcome.series.iter().map(|s| s.file.as_str()).collect::<Vec<_>>(),
        "reports": entries,
    });
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    std::fs::write(&path, text).map_err(|source| OutputError::Io { path, source })?;
    Ok(outcome)
}

/// Runs the checks without writing anything.
pub fn check(cfg: &ScenarioConfig) -> Result<Outcome, AppError> {
    Ok(execute(cfg, false)?)
}

/// One line per report: `PASS name max_residual=… tolerance=…`.
pub fn summary_lines(outcome: &Outcome) -> Vec<String> {
    outcome
        .reports
        .iter()
        .map(|r| {
            let status = match (r.skipped, r.pass) {
                (true, _) => "SKIP",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            format!("{status} {} max_residual={:.3e} tolerance={:.1e}", r.check, r.max_residual, r.tolerance)
        })
        .collect()
}
