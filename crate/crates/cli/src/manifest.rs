use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub subcommand: String,
    /// Decimal, so the whole u64 range fits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    pub config_hash: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    #[serde(default)]
    artifacts: BTreeMap<String, Entry>,
}

/// Merges `entries` (keyed by path relative to `out`) into `out/manifest.toml`.
pub fn record(out: &Path, entries: &[(String, Entry)]) -> Result<()> {
    let path = out.join(FILE);
    let mut manifest = if path.exists() {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        Manifest::default()
    };
    for (artifact, entry) in entries {
        manifest.artifacts.insert(artifact.clone(), entry.clone());
    }
    let text = toml::to_string(&manifest).context("serialising manifest")?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
