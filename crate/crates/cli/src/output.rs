//! Artifact writing. Every file carries the same metadata: a `# {json}`
//! first line for CSV, a `meta` member for JSON, the first record for JSON
//! lines. Files are written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub entropy_units: &'static str,
}

impl Meta {
    /// The hash covers the resolved configuration, so files that differ only
    /// in layout or comments share it.
    pub fn new(command: &str, config: &RunConfig, bits: bool) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        Meta {
            tool: "lambda-adapt",
            version: VERSION,
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            entropy_units: if bits { "bits" } else { "nats" },
        }
    }
}

pub struct Outputs {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path, meta: Meta) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn atomic(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with a metadata comment line; `extra` is merged into it.
    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
        extra: Value,
    ) -> std::io::Result<()> {
        let mut meta = serde_json::to_value(&self.meta).unwrap();
        merge(&mut meta, extra);
        let mut buf = format!("# {meta}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        self.atomic(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> std::io::Result<()> {
        let doc = json!({ "meta": self.meta, "data": body });
        let mut text = serde_json::to_string_pretty(&doc).unwrap();
        text.push('\n');
        self.atomic(name, text.as_bytes())
    }

    pub fn json_lines<T: Serialize>(&mut self, name: &str, records: &[T]) -> std::io::Result<()> {
        let mut text = serde_json::to_string(&json!({ "meta": self.meta })).unwrap();
        text.push('\n');
        for r in records {
            text.push_str(&serde_json::to_string(r).unwrap());
            text.push('\n');
        }
        self.atomic(name, text.as_bytes())
    }
}

fn merge(into: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, extra) {
        a.extend(b);
    }
}

/// Shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
