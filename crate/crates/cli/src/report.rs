//! Line-delimited reports: one `{"record": ...}` line per item, then a
//! `{"summary": ..., "manifest": ...}` line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub seed: u64,
    pub version: String,
    /// sha256 of each input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        let config = match serde_json::to_value(config)? {
            Value::Object(map) => map.into_iter().collect(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        Ok(RunManifest {
            command: command.to_string(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }
}

pub struct Report {
    out: Option<PathBuf>,
    records: Vec<String>,
}

impl Report {
    pub fn new(out: Option<PathBuf>) -> Self {
        Report {
            out,
            records: Vec::new(),
        }
    }

    pub fn record(&mut self, value: &impl Serialize) -> Result<()> {
        let line = serde_json::to_string(&serde_json::json!({ "record": value }))?;
        self.records.push(line);
        Ok(())
    }

    /// Writes the report to `--out`, or the summary alone to stdout.
    pub fn finish(self, summary: &impl Serialize, manifest: &RunManifest) -> Result<()> {
        let tail = serde_json::json!({ "summary": summary, "manifest": manifest });
        match &self.out {
            Some(path) => {
                let mut body = String::new();
                for line in &self.records {
                    body.push_str(line);
                    body.push('\n');
                }
                body.push_str(&serde_json::to_string(&tail)?);
                body.push('\n');
                fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                serde_json::to_writer_pretty(&mut stdout, &tail)?;
                writeln!(stdout)?;
            }
        }
        Ok(())
    }
}
