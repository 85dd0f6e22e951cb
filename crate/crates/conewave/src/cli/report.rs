//! Report assembly: everything is built in memory and written only once the
//! run has finished, so a failed run leaves no files behind.

use super::CliError;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const REPORT_FILE: &str = "report.json";
/// Holds the wall-clock timestamp, which is kept out of the hashed report.
pub const SIDECAR_FILE: &str = "report.meta.json";

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL: Tool = Tool { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") };

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Inconclusive,
    Failed,
}

#[derive(Serialize)]
struct Body<'a> {
    tool: &'a Tool,
    command: &'a str,
    seed: u64,
    status: Status,
    config: &'a Value,
    results: &'a Value,
    outputs: &'a [OutputEntry],
}

#[derive(Serialize)]
struct Hashed<'a> {
    #[serde(flatten)]
    body: Body<'a>,
    content_hash: String,
}

/// Files produced by one run, plus the report itself.
pub struct RunOutput {
    pub command: &'static str,
    pub seed: u64,
    pub status: Status,
    pub config: Value,
    pub results: Value,
    /// Lines echoed to stdout; not part of the report.
    pub console: Vec<String>,
    files: Vec<(String, Vec<u8>)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

impl RunOutput {
    pub fn new(command: &'static str, seed: u64, config: Value) -> Self {
        Self { command, seed, status: Status::Ok, config, results: Value::Null, console: Vec::new(), files: Vec::new() }
    }

    pub fn add_file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn entries(&self) -> Vec<OutputEntry> {
        self.files
            .iter()
            .map(|(name, b)| OutputEntry { name: name.clone(), bytes: b.len(), sha256: sha256_hex(b) })
            .collect()
    }

    /// Pretty-printed report and its content hash.
    pub fn render(&self) -> (String, String) {
        let outputs = self.entries();
        let body = Body {
            tool: &TOOL,
            command: self.command,
            seed: self.seed,
            status: self.status,
            config: &self.config,
            results: &self.results,
            outputs: &outputs,
        };
        let hash = format!("sha256:{}", sha256_hex(&serde_json::to_vec(&body).expect("report serializes")));
        let text = serde_json::to_string_pretty(&Hashed { body, content_hash: hash.clone() }).expect("report serializes");
        (text + "\n", hash)
    }

    /// Writes the auxiliary files, the report and the sidecar into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, String), CliError> {
        let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
        std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| io(e, &p))?;
        }
        let (text, hash) = self.render();
        let report = dir.join(REPORT_FILE);
        std::fs::write(&report, text).map_err(|e| io(e, &report))?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = serde_json::json!({ "content_hash": hash, "timestamp_unix": stamp });
        let sidecar = dir.join(SIDECAR_FILE);
        std::fs::write(&sidecar, serde_json::to_string_pretty(&meta).expect("json") + "\n").map_err(|e| io(e, &sidecar))?;
        Ok((report, hash))
    }
}
