//! Library side of the `qkinet` experiment runner: config parsing, result
//! tables, and the experiments themselves. The binary in `main.rs` is a thin
//! shell over [`run_to_files`].

pub mod config;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use config::ExperimentConfig;
use experiments::{run_experiment, ExperimentError};
use table::Metadata;

/// Which formats `run` persists.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

/// Outcome of a full run: where results were written and whether every
/// tolerance held.
pub struct RunReport {
    pub passed: bool,
    pub written: Vec<PathBuf>,
}

/// Parse `config_text`, run the named experiment, and persist the table
/// under `out_dir` (created if needed) as `<stem>.csv` / `<stem>.json`.
/// Output files appear only after the run finishes (atomic rename), so a
/// failed run leaves nothing partial behind.
pub fn run_to_files(
    config_text: &str,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunReport, ExperimentError> {
    let cfg = ExperimentConfig::parse_str(config_text)?;
    let started = Instant::now();
    let mut outcome = run_experiment(&cfg)?;
    outcome.table.metadata = Metadata {
        config_hash: hex_digest(config_text),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };

    std::fs::create_dir_all(out_dir).map_err(|source| {
        ExperimentError::Table(table::TableError::Io {
            path: out_dir.display().to_string(),
            source,
        })
    })?;
    let mut written = Vec::new();
    if format != OutputFormat::Json {
        let path = out_dir.join(format!("{}.csv", cfg.stem));
        outcome.table.write_atomic(&path, &outcome.table.to_csv())?;
        written.push(path);
    }
    if format != OutputFormat::Csv {
        let path = out_dir.join(format!("{}.json", cfg.stem));
        let text = serde_json::to_string_pretty(&outcome.table.to_json())
            .expect("tables serialize to JSON");
        outcome.table.write_atomic(&path, &text)?;
        written.push(path);
    }
    Ok(RunReport { passed: outcome.passed, written })
}

fn hex_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
