//! Run manifests written next to every output set.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{to_document, ParsedConfig};
use super::IoError;
use crate::sweep::TOOL_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the resolved configuration's canonical JSON.
    pub config_sha256: String,
    pub command: String,
    /// Resolved configuration in SI units (rad/s, s, K).
    pub resolved: Value,
    /// Normalized input document with defaults written out.
    pub document: Value,
    pub outputs: Vec<String>,
    /// Extra values such as the shared drive hash.
    pub extra: Value,
    /// Creation time; not part of any hash.
    pub created_unix_s: u64,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ParsedConfig, outputs: Vec<String>, extra: Value) -> Self {
        RunManifest {
            tool_version: TOOL_VERSION.into(),
            config_sha256: cfg.hash(),
            command: command.into(),
            resolved: cfg.resolved_json(),
            document: to_document(cfg),
            outputs,
            extra,
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| IoError::at(dir, e))?;
        }
        std::fs::write(path, self.to_json()).map_err(|e| IoError::at(path, e))
    }
}
