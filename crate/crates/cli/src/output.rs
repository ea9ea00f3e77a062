//! Run manifests and deterministic output writing.
//!
//! Every output file embeds the manifest of the run that produced it, and
//! identical manifests produce byte-identical files: maps are ordered, no
//! timestamps, floats serialize to their shortest round-trip form.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::commands::CliError;

/// Environment variable prefixing relative `--out` paths.
pub const OUT_DIR_VAR: &str = "RUNCHAIN_OUT_DIR";

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub artifact_version: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_owned(),
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
            seed: None,
            output: None,
            artifact_version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }

    pub fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn input_opt(self, key: &str, value: Option<&Path>) -> Self {
        match value {
            Some(path) => self.input(key, path.display()),
            None => self,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Resolve `--out` against the output-directory override.
pub fn resolve_out(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if out.is_relative() => PathBuf::from(dir).join(out),
        _ => out.to_path_buf(),
    }
}

/// Assemble `{"manifest": ..., <payload fields>}` and write it to the
/// output file, or to stdout when no file was requested.
pub fn emit(mut manifest: RunManifest, payload: Value, out: Option<&Path>) -> Result<(), CliError> {
    let resolved = out.map(resolve_out);
    manifest.output = resolved.as_ref().map(|p| p.display().to_string());
    let mut document = serde_json::Map::new();
    document.insert(
        "manifest".to_owned(),
        serde_json::to_value(&manifest).expect("manifest serializes"),
    );
    if let Value::Object(fields) = payload {
        document.extend(fields);
    } else {
        document.insert("result".to_owned(), payload);
    }
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&Value::Object(document)).expect("document serializes")
    );
    match resolved {
        Some(path) => {
            std::fs::write(&path, text)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
