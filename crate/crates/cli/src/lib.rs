//! Batch front end for the coupled-cavity optomechanics library.
//!
//! A run reads a scenario file, executes one task (or a sweep of it) and
//! writes CSV tables, JSON summaries and a checksummed manifest. See
//! `docs/formats.md` for the file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

use std::path::Path;

use serde_json::json;

pub use config::{parse_config, serialize_config, ConfigError, Formats, ScenarioConfig, TaskKind};
pub use output::{render, write_atomic, OutputFile};
pub use run::{run_scenario, TaskOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(optomech_core::Error),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(e) if is_input_error(e) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn record(&self) -> OutputFile {
        let code = self.exit_code();
        match self {
            Failure::Config(e) => output::error_file(code, "config", &e.to_string(), json!(e)),
            Failure::Numerical(e) => output::error_file(
                code,
                if code == EXIT_CONFIG { "config" } else { "numerical" },
                &e.to_string(),
                json!({ "error": run::error_kind(e) }),
            ),
            Failure::Io(e) => output::error_file(code, "io", &e.to_string(), json!(null)),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// Core errors that stem from the inputs rather than the numerics.
fn is_input_error(e: &optomech_core::Error) -> bool {
    matches!(
        e,
        optomech_core::Error::InvalidParams { .. }
            | optomech_core::Error::InvalidDrive(_)
            | optomech_core::Error::DegenerateGrid(_)
    )
}

/// Command-line request.
#[derive(Debug, Clone)]
pub struct Invocation<'a> {
    pub task: TaskKind,
    pub config: &'a Path,
    pub out: &'a Path,
    pub formats: Option<Formats>,
    pub jobs: Option<usize>,
}

fn execute(inv: &Invocation) -> Result<Vec<OutputFile>, Failure> {
    let text = std::fs::read_to_string(inv.config).map_err(Failure::Io)?;
    let mut cfg = parse_config(&text).map_err(Failure::Config)?;
    if cfg.kind() != inv.task {
        return Err(Failure::Config(ConfigError {
            line: None,
            kind: config::ConfigErrorKind::Invariant,
            message: format!("command asks for `{}` but the scenario describes `{}`", inv.task, cfg.kind()),
        }));
    }
    if let Some(f) = inv.formats {
        cfg.formats = f;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = inv.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Io(std::io::Error::other(e)))?;
    let out = pool.install(|| run_scenario(&cfg)).map_err(Failure::Numerical)?;
    let files = render(&cfg, &out);
    write_atomic(inv.out, &files).map_err(Failure::Io)?;
    Ok(files)
}

/// Runs a request end to end and returns the process exit code. Failures
/// leave an `error.json` in the output directory when it is writable.
pub fn run_cli(inv: &Invocation) -> i32 {
    match execute(inv) {
        Ok(files) => {
            log::info!("wrote {} files to {}", files.len(), inv.out.display());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("optomech-switch: {f}");
            if let Err(e) = write_atomic(inv.out, &[f.record()]) {
                eprintln!("optomech-switch: could not write error record: {e}");
            }
            f.exit_code()
        }
    }
}
