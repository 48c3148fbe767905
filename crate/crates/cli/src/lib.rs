//! Scenario-driven experiments over the `anticoncentration` library.
//!
//! A scenario is a JSON file naming a group, a task and its inputs; running
//! it writes a CSV table, the fully resolved scenario and any side artifacts.
//! Exit codes: 0 when every check holds, 1 on a soundness violation, 2 on
//! malformed input or a failed precondition.

pub mod error;
pub mod run;
pub mod scenario;
pub mod table;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use error::CliError;
pub use run::{run_file, run_scenario, RunOutput};
pub use scenario::{Scenario, Task};
pub use table::{Row, Table};

/// Environment variable holding the worker count for `verify-all`.
pub const WORKERS_ENV: &str = "ANTICONCENTRATION_LAB_WORKERS";

/// Outcome of one file in a batch.
#[derive(Debug)]
pub struct BatchEntry {
    pub file: PathBuf,
    pub exit_code: i32,
    pub message: String,
}

pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every `*.json` scenario in `dir`, each into `out/<file stem>/`, and
/// writes `out/summary.csv`. Returns the entries in file order.
pub fn verify_all(dir: &Path, out: &Path, workers: usize) -> Result<Vec<BatchEntry>, CliError> {
    let files = scenario_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let entries: Vec<BatchEntry> = pool.install(|| {
        files
            .par_iter()
            .map(|file| {
                let stem = file.file_stem().unwrap_or_default();
                match run_file(file, &out.join(stem)) {
                    Ok(o) => BatchEntry {
                        file: file.clone(),
                        exit_code: o.exit_code(),
                        message: o
                            .violations
                            .iter()
                            .chain(&o.rejections)
                            .cloned()
                            .collect::<Vec<_>>()
                            .join("; "),
                    },
                    Err(e) => BatchEntry {
                        file: file.clone(),
                        exit_code: 2,
                        message: e.to_string(),
                    },
                }
            })
            .collect()
    });
    let mut table = Table::default();
    for e in &entries {
        let name = e.file.file_name().unwrap_or_default().to_string_lossy().into_owned();
        table.push(
            Row::new()
                .text("file", name)
                .text("exit_code", e.exit_code)
                .text("message", &e.message),
        );
    }
    std::fs::create_dir_all(out)
        .and_then(|_| std::fs::write(out.join("summary.csv"), table.to_csv()))
        .map_err(|e| CliError::Io {
            path: out.display().to_string(),
            message: e.to_string(),
        })?;
    Ok(entries)
}

/// Batch exit code: 1 if any scenario violated a check, else 2 if any failed
/// to run, else 0.
pub fn batch_exit_code(entries: &[BatchEntry]) -> i32 {
    if entries.iter().any(|e| e.exit_code == 1) {
        1
    } else if entries.iter().any(|e| e.exit_code != 0) {
        2
    } else {
        0
    }
}
