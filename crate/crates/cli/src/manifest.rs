use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::files::write_json;
use crate::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of inputs and parameters.
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_s: f64,
    /// Every tolerance and setting in effect, defaults included.
    pub defaults: Value,
}

/// Hashes `{command, inputs, parameters}`. Object keys are sorted by
/// `serde_json`, so equal content gives equal hashes.
pub fn config_hash(command: &str, inputs: &Value, parameters: &Value) -> String {
    let canonical = json!({ "command": command, "inputs": inputs, "parameters": parameters });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

pub struct RunTimer {
    command: &'static str,
    start: Instant,
}

impl RunTimer {
    pub fn start(command: &'static str) -> Self {
        Self { command, start: Instant::now() }
    }

    pub fn finish(self, dir: &Path, inputs: Value, parameters: Value, seed: u64) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config_hash: config_hash(self.command, &inputs, &parameters),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            defaults: parameters,
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": [1.5, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": [1.5, 2], "b": 1}"#).unwrap();
        let p = json!({"tol": 1e-10});
        assert_eq!(config_hash("x", &a, &p), config_hash("x", &b, &p));
        assert_ne!(config_hash("x", &a, &p), config_hash("y", &a, &p));
        assert_eq!(config_hash("x", &a, &p).len(), 64);
    }
}
