use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;
use crate::{Failure, Outcome};

/// Everything needed to re-run one command: its full invocation, resolved
/// settings, inputs, outputs and tool version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Worker threads the command ran with.
    pub threads: usize,
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
    /// Resolved settings, including defaults the invocation left implicit.
    pub config: BTreeMap<String, Value>,
    pub invocation: Command,
}

impl RunManifest {
    pub fn new(command: &Command, threads: usize, outcome: &Outcome) -> Self {
        let primary = outcome.outputs.first().cloned().unwrap_or_default();
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            inputs: outcome.inputs.clone(),
            output_dir: primary.parent().map(Path::to_path_buf).unwrap_or_default(),
            outputs: outcome.outputs.clone(),
            config: outcome.config.clone(),
            invocation: command.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("malformed manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n")
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
    }
}

/// `<out>.manifest.json`, next to the primary output.
pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `out` with `suffix` appended to its file name.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}
