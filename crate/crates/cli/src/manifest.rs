use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one run: inputs, their hash and every file written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model_file: PathBuf,
    pub config: serde_json::Value,
    /// sha256 over the model bytes followed by the canonical config JSON.
    pub input_hash: String,
    pub timestamp_unix: u64,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, model_file: &Path, model_bytes: &[u8], config: serde_json::Value) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(model_bytes);
        hasher.update(config.to_string().as_bytes());
        let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            command: command.to_string(),
            model_file: model_file.to_path_buf(),
            config,
            input_hash: hex::encode(hasher.finalize()),
            timestamp_unix,
            artifacts: Vec::new(),
        }
    }
}

/// Writes artifacts into one output directory and remembers them.
pub struct Outputs {
    dir: Option<PathBuf>,
    pub manifest: RunManifest,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>, manifest: RunManifest) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir, manifest })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, contents)?;
            self.manifest.artifacts.push(path);
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        self.write(name, &(text + "\n"))
    }

    /// Writes `manifest.json`, listing itself last.
    pub fn finish(mut self) -> std::io::Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join("manifest.json");
            self.manifest.artifacts.push(path.clone());
            let text = serde_json::to_string_pretty(&self.manifest).map_err(std::io::Error::other)?;
            fs::write(path, text + "\n")?;
        }
        Ok(())
    }
}
