//! Run manifests: every output directory gets exactly one, carrying enough
//! to re-run the command byte-for-byte.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use lmpsh::Result;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timestamp: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(config: &impl Serialize, seed: Option<u64>) -> Self {
        let config = serde_json::to_value(config).expect("config serializes");
        let canonical = serde_json::to_string(&config).expect("value serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let config_hash = format!("{:x}", hasher.finalize());
        RunManifest {
            command: std::env::args().collect::<Vec<_>>().join(" "),
            config_hash,
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) -> PathBuf {
        self.outputs.push(path.display().to_string());
        path.to_path_buf()
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let file = std::fs::File::create(out_dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
