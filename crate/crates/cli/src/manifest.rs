//! Output bookkeeping: each file is buffered, checksummed and written
//! through a temporary name so a crash never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        atomic_write(&self.dir.join(name), &buf)?;
        self.files.push(OutputFile {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(&buf)),
            bytes: buf.len(),
        });
        Ok(())
    }
}

fn atomic_write(path: &Path, data: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Write `manifest.json` describing the run and every output file.
pub fn write(
    dir: &Path,
    command: &str,
    nh: bool,
    cfg: &RunConfig,
    derived: serde_json::Value,
    outputs: &Outputs,
) -> Result<(), CliError> {
    let config_toml = toml::to_string(cfg)
        .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?;
    let files: Vec<_> = outputs
        .files
        .iter()
        .map(|f| json!({ "name": f.name, "sha256": f.sha256, "bytes": f.bytes }))
        .collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "nh": nh,
        "config": cfg,
        "config_toml": config_toml,
        "derived": derived,
        "outputs": files,
    });
    let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest is valid JSON");
    text.push(b'\n');
    atomic_write(&dir.join("manifest.json"), &text)?;
    Ok(())
}
