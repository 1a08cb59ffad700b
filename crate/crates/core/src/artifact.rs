//! JSON model-exchange format shared by the CLI commands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fine_gray::PSHFit;
use crate::supermodel::SupermodelFit;

/// A fitted model on disk: either a (possibly landmark) PSH fit or a
/// supermodel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelArtifact {
    Psh(PSHFit),
    Supermodel(SupermodelFit),
}

impl ModelArtifact {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    pub fn covariate_names(&self) -> &[String] {
        match self {
            ModelArtifact::Psh(fit) => &fit.covariate_names,
            ModelArtifact::Supermodel(fit) => &fit.covariate_names,
        }
    }
}
