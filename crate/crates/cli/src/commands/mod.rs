mod eval;
mod synth;
mod train;
mod verify;

pub use eval::eval;
pub use synth::synth;
pub use train::train;
pub use verify::verify;

use std::path::Path;

use crate::CliError;

fn write(dir: &Path, name: &str, content: &str) -> Result<std::path::PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    Ok(serde_json::to_value(v).map_err(equiflow::Error::from)?)
}
