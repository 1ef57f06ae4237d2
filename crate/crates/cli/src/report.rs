//! Writing report bundles and checking them afterwards.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rankone_core::rng::RNG_ALGORITHM;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, ExperimentConfig};
use crate::error::CliError;
use crate::pipeline::Report;

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

/// Run metadata. The only file allowed to differ between identical runs.
#[derive(Debug, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub config_hash: String,
    pub workers: usize,
    pub created_unix: u64,
    pub files: Vec<FileDigest>,
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io(path, e))
}

pub fn summary_text(cfg: &ExperimentConfig, report: &Report) -> String {
    format!(
        "config_hash = {}\nrng = {RNG_ALGORITHM}\nseed = {}\n{}",
        cfg.hash(),
        cfg.seed,
        report.summary
    )
}

/// Writes `config.json`, one CSV per table, `summary.txt` and `meta.json`.
pub fn write_bundle(out: &Path, cfg: &ExperimentConfig, report: &Report, workers: usize) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let mut files = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
        write(&out.join(&name), &bytes)?;
        files.push(FileDigest { sha256: sha256_hex(&bytes), name });
        Ok(())
    };
    put(CONFIG_FILE.into(), cfg.to_json().into_bytes())?;
    for t in &report.tables {
        put(format!("{}.csv", t.name), t.render().into_bytes())?;
    }
    put(SUMMARY_FILE.into(), summary_text(cfg, report).into_bytes())?;
    let meta = Meta {
        tool: "rankone".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng: RNG_ALGORITHM.into(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        workers,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        files,
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write(&out.join(META_FILE), json.as_bytes())
}

/// Checks a bundle: the stored config hashes to the recorded hash, the summary
/// carries the same hash, every listed file is intact, and (if given) the
/// external config matches too.
pub fn verify(out: &Path, expected: Option<&ExperimentConfig>) -> Result<String, CliError> {
    let read = |name: &str| -> Result<Vec<u8>, CliError> {
        let p = out.join(name);
        fs::read(&p).map_err(|e| io(&p, e))
    };
    let meta: Meta = serde_json::from_slice(&read(META_FILE)?)
        .map_err(|e| CliError::Validation(format!("meta.json: {e}")))?;
    let stored = ExperimentConfig::from_json(&String::from_utf8_lossy(&read(CONFIG_FILE)?))?;
    let reject = |why: String| Err(CliError::Validation(format!("report rejected: {why}")));
    if stored.hash() != meta.config_hash {
        return reject(format!("config.json hashes to {} but meta.json records {}", stored.hash(), meta.config_hash));
    }
    let summary = String::from_utf8_lossy(&read(SUMMARY_FILE)?).into_owned();
    let line = format!("config_hash = {}", meta.config_hash);
    if summary.lines().next() != Some(line.as_str()) {
        return reject("summary.txt carries a different config hash".into());
    }
    for f in &meta.files {
        let got = sha256_hex(&read(&f.name)?);
        if got != f.sha256 {
            return reject(format!("{} was modified (sha256 {got}, expected {})", f.name, f.sha256));
        }
    }
    if let Some(cfg) = expected {
        if cfg.hash() != meta.config_hash {
            return reject(format!("config hash {} does not match the report's {}", cfg.hash(), meta.config_hash));
        }
    }
    Ok(format!("ok: {} files, config_hash = {}", meta.files.len(), meta.config_hash))
}
