//! Verdicts, summary files, and deterministic CSV output.
//!
//! Every experiment writes `summary.txt` (config echo, seed, content hash,
//! verdicts, timing) plus experiment-specific CSV files. CSV bytes are fully
//! determined by config and seed; timing lives only in the summary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// One named pass/fail check with its evidence.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Everything an experiment hands back to the driver.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub verdicts: Vec<Verdict>,
    /// Extra `key = value` lines for the summary's results block.
    pub results: Vec<(String, String)>,
    pub csv_files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn new() -> Self {
        Self {
            verdicts: Vec::new(),
            results: Vec::new(),
            csv_files: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn record(&mut self, key: &str, value: impl std::fmt::Display) {
        self.results.push((key.to_string(), value.to_string()));
    }
}

impl Default for ExperimentOutcome {
    fn default() -> Self {
        Self::new()
    }
}

/// Hex SHA-256 of a byte string.
pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Creates the output directory (warning when it was missing) and returns
/// its path.
pub fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    if !cfg.out_dir.exists() {
        if !cfg.quiet {
            eprintln!(
                "warning: output directory {} does not exist, creating it",
                cfg.out_dir.display()
            );
        }
        fs::create_dir_all(&cfg.out_dir)
            .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    }
    Ok(cfg.out_dir.clone())
}

/// Writes a CSV file from a header and preformatted rows.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut file = fs::File::create(&path).with_context(|| format!("creating {name}"))?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(path)
}

/// Writes `summary.txt` and returns its path.
pub fn write_summary(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    elapsed: Duration,
) -> Result<PathBuf> {
    let echo = cfg.echo();
    let path = dir.join("summary.txt");
    let mut file = fs::File::create(&path).context("creating summary.txt")?;
    writeln!(file, "experiment = {}", cfg.experiment.name())?;
    writeln!(file, "seed = {}", cfg.run.seed)?;
    writeln!(file, "config_sha256 = {}", content_hash(echo.as_bytes()))?;
    writeln!(file, "elapsed_seconds = {:.3}", elapsed.as_secs_f64())?;
    writeln!(file, "-- config --")?;
    write!(file, "{echo}")?;
    if !outcome.results.is_empty() {
        writeln!(file, "-- results --")?;
        for (k, v) in &outcome.results {
            writeln!(file, "{k} = {v}")?;
        }
    }
    writeln!(file, "-- verdicts --")?;
    for v in &outcome.verdicts {
        writeln!(
            file,
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        )?;
    }
    writeln!(
        file,
        "overall = {}",
        if outcome.all_passed() { "PASS" } else { "FAIL" }
    )?;
    Ok(path)
}
