use std::path::Path;

use serde::Deserialize;

use corrwalk::models::ModelSpec;
use corrwalk::montecarlo::InitialDoc;
use corrwalk::{Error, Result};

/// Experiment file: a bare model spec, or `{spec, initial?, t?, M?, dt?, seed?}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub spec: ModelSpec,
    #[serde(default)]
    pub initial: Option<InitialDoc>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default, rename = "M")]
    pub m: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: malformed JSON: {e}", path.display())))?;
        let bad = |e: serde_json::Error| Error::Usage(format!("{}: {e}", path.display()));
        if value.get("spec").is_some() {
            serde_json::from_value(value).map_err(bad)
        } else {
            Ok(Config {
                spec: serde_json::from_value(value).map_err(bad)?,
                initial: None,
                t: None,
                m: None,
                dt: None,
                seed: None,
            })
        }
    }
}
