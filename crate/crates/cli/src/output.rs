//! Result files: CSV tables, JSON documents, the manifest and atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{serialize_config, ScenarioConfig};
use crate::run::TaskOutput;

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self::from_header(header.iter().map(|s| s.to_string()).collect())
    }

    pub fn from_header(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("JSON values always serialise");
    b.push(b'\n');
    b
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Lays out every file of a successful run, manifest last.
pub fn render(cfg: &ScenarioConfig, out: &TaskOutput) -> Vec<OutputFile> {
    let canonical = serialize_config(cfg);
    let mut files = vec![OutputFile {
        name: "scenario.cfg".into(),
        bytes: canonical.clone().into_bytes(),
    }];
    if cfg.formats.csv {
        for (name, t) in &out.tables {
            files.push(OutputFile {
                name: name.clone(),
                bytes: t.to_csv(),
            });
        }
    }
    if cfg.formats.json {
        files.push(OutputFile {
            name: "results.json".into(),
            bytes: json_bytes(&out.results),
        });
        if let Some(p) = &out.peaks {
            files.push(OutputFile {
                name: "peaks.json".into(),
                bytes: json_bytes(p),
            });
        }
    }
    let manifest = json!({
        "tool": "optomech-switch",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": optomech_core::VERSION,
        "task": cfg.kind().as_str(),
        "config_sha256": sha256_hex(canonical.as_bytes()),
        "files": files.iter().map(|f| json!({
            "name": f.name,
            "bytes": f.bytes.len(),
            "sha256": sha256_hex(&f.bytes),
        })).collect::<Vec<_>>(),
    });
    files.push(OutputFile {
        name: "manifest.json".into(),
        bytes: json_bytes(&manifest),
    });
    files
}

/// Stages every file as a temporary in `dir`, then renames them into
/// place, so a failure never leaves a half-written file behind.
pub fn write_atomic(dir: &Path, files: &[OutputFile]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for f in files {
        let mut tmp = tempfile::Builder::new().prefix(".staging-").tempfile_in(dir)?;
        tmp.write_all(&f.bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(&f.name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| e.error)?;
    }
    Ok(())
}

/// Machine-readable failure record.
pub fn error_file(exit_code: i32, kind: &str, message: &str, detail: Value) -> OutputFile {
    OutputFile {
        name: "error.json".into(),
        bytes: json_bytes(&json!({
            "exit_code": exit_code,
            "kind": kind,
            "message": message,
            "detail": detail,
        })),
    }
}
