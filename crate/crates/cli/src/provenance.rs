//! Provenance blocks: resolved config plus checksums of every input.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const CSV_CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub name: String,
    /// File path, or `bundled:<file>` for built-in data.
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub config: RunConfig,
    pub inputs: Vec<InputRecord>,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Provenance {
            tool: format!("vipv {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config: config.clone(),
            inputs: Vec::new(),
        }
    }

    /// Reads an input file, or falls back to bundled text, and records its checksum.
    pub fn load(
        &mut self,
        name: &str,
        path: Option<&str>,
        bundled: &'static str,
        bundled_file: &str,
    ) -> Result<String, CliError> {
        let (text, source) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{p}: {e}")))?,
                p.to_string(),
            ),
            None => (bundled.to_string(), format!("bundled:{bundled_file}")),
        };
        self.inputs.push(InputRecord {
            name: name.to_string(),
            source,
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    /// JSON document with this block and the result.
    pub fn json_document(&self, result: &impl Serialize) -> String {
        #[derive(Serialize)]
        struct Document<'a, T: Serialize> {
            provenance: &'a Provenance,
            result: &'a T,
        }
        let mut out = serde_json::to_string_pretty(&Document {
            provenance: self,
            result,
        })
        .expect("output serializes");
        out.push('\n');
        out
    }

    /// `#` comment lines for the top of a CSV file.
    pub fn csv_header(&self) -> String {
        let mut out = format!("# {} {}\n", self.tool, self.command);
        out.push_str(CSV_CONFIG_PREFIX);
        out.push_str(&serde_json::to_string(&self.config).expect("config serializes"));
        out.push('\n');
        for i in &self.inputs {
            out.push_str(&format!("# input {} {} sha256:{}\n", i.name, i.source, i.sha256));
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
