//! Result documents: pretty JSON with fields in declaration order and no
//! run-dependent content (timestamps, thread counts, paths).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const TOOL: &str = "focal";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Model label used by `report` column headers.
    pub model: String,
    pub config_sha256: String,
    pub data_sha256: Option<String>,
    pub seed: u64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl Meta {
    pub fn new(command: &str, model: &str, config: &RunConfig, data_sha256: Option<String>, n_rows: usize, n_cols: usize) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            model: model.into(),
            config_sha256: config.hash(),
            data_sha256,
            seed: config.seed,
            n_rows,
            n_cols,
        }
    }
}

/// One comparable number of a result, keyed by a model-independent name:
/// well-being slopes use the bare covariate name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub estimate: f64,
    /// `None` when unavailable.
    pub se: Option<f64>,
}

impl SummaryRow {
    pub fn new(name: impl Into<String>, estimate: f64, se: f64) -> Self {
        Self { name: name.into(), estimate, se: se.is_finite().then_some(se) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<R> {
    pub meta: Meta,
    pub config: RunConfig,
    pub summary: Vec<SummaryRow>,
    pub result: R,
}

pub fn to_json<R: Serialize>(doc: &Document<R>) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Estimation(format!("cannot encode result: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Clone, Deserialize)]
pub struct LoadedDocument {
    pub meta: Meta,
    pub summary: Vec<SummaryRow>,
}

pub fn read_document(path: &Path) -> Result<LoadedDocument, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{} is not a result document: {e}", path.display())))
}
