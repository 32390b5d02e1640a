//! Run manifests: the resolved invocation, input digests and output names.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::commands::Run;
use crate::output::{sha256, Inputs};
use crate::CliError;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub run: Run,
    /// Absolute input path to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file names relative to the output directory, in write order.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(run: Run, inputs: Inputs, outputs: Vec<String>) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: run.seed(),
            run,
            inputs: inputs.hashes,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: not a run manifest: {e}", path.display())))
    }

    /// The recorded run, provided every input still has its recorded digest.
    pub fn verified_run(self) -> Result<Run, CliError> {
        if self.version != env!("CARGO_PKG_VERSION") {
            log::warn!(
                "manifest was written by version {}, running {}",
                self.version,
                env!("CARGO_PKG_VERSION")
            );
        }
        for (path, digest) in &self.inputs {
            let bytes = fs::read(path)
                .map_err(|e| CliError::input(format!("{path}: {e}")))?;
            if sha256(&bytes) != *digest {
                return Err(CliError::input(format!(
                    "{path} changed since the manifest was written"
                )));
            }
        }
        log::info!("rerunning '{}'", self.run.name());
        Ok(self.run)
    }
}
