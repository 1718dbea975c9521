use std::path::Path;

use anyhow::{bail, Context, Result};
use patlcheck::builder::BuildConfig;
use patlcheck::patl::CheckConfig;
use patlcheck::simgen::SimConfig;
use serde::{Deserialize, Serialize};

/// `--config` file: one optional section per subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub simulate: SimConfig,
    pub build: BuildConfig,
    pub check: CheckConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let cfg: Self = match ext {
            "toml" => {
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            "json" => serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?,
            other => bail!(
                "config {}: unsupported extension {other:?} (toml or json)",
                path.display()
            ),
        };
        Ok(cfg)
    }
}
