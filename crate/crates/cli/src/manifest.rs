use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Written next to the outputs of every artifact-producing command. Only
/// `started_unix` and `duration_secs` differ between identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix: u64,
    pub duration_secs: f64,
}

pub struct Run {
    command: &'static str,
    start: Instant,
    unix: u64,
}

impl Run {
    pub fn start(command: &'static str) -> Self {
        Self {
            command,
            start: Instant::now(),
            unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn finish(
        self,
        dir: &Path,
        seed: u64,
        config: serde_json::Value,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            inputs,
            outputs,
            started_unix: self.unix,
            duration_secs: self.start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(equiflow::Error::from)?;
        std::fs::write(dir.join(RUN_MANIFEST), text + "\n")?;
        Ok(())
    }
}
