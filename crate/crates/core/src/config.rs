//! Run configuration: a TOML file, then `SAC_OIE_*` environment variables,
//! then `section.key=value` overrides, later sources winning.
//!
//! ```toml
//! [train]
//! seed = 13
//! epochs = 20
//!
//! [model]
//! inventory = "oia-sp"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chunker::ChunkerSettings;
use crate::error::{Error, Result};
use crate::extractor::OieSettings;
use crate::model::{ChunkInventory, MAX_ARG_ROLES};
use crate::train::TrainConfig;

pub const ENV_PREFIX: &str = "SAC_OIE_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d_h: usize,
    pub d_l: usize,
    pub gcn_layers: usize,
    pub arg_roles: usize,
    pub alpha: f64,
    /// `conll` or `oia-sp`.
    pub inventory: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_h: crate::chunker::DEFAULT_HIDDEN,
            d_l: crate::extractor::DEFAULT_LABEL_DIM,
            gcn_layers: crate::extractor::DEFAULT_GCN_LAYERS,
            arg_roles: MAX_ARG_ROLES,
            alpha: crate::chunker::DEFAULT_ALPHA,
            inventory: "conll".into(),
        }
    }
}

/// Default file locations; command-line paths take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    pub embeddings: Option<PathBuf>,
    pub chunker: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub paths: PathConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let m = &self.model;
        for (name, v) in [("d_h", m.d_h), ("d_l", m.d_l), ("gcn_layers", m.gcn_layers), ("arg_roles", m.arg_roles)] {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be positive")));
            }
        }
        if m.arg_roles > MAX_ARG_ROLES {
            return Err(Error::Config(format!("model.arg_roles must be at most {MAX_ARG_ROLES}")));
        }
        if !(m.alpha > 0.0) {
            return Err(Error::Config("model.alpha must be positive".into()));
        }
        ChunkInventory::by_name(&m.inventory).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Applies `section.key=value` assignments. Values are read as TOML
    /// literals, falling back to a bare string.
    pub fn with_overrides<I, S>(&self, assignments: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for a in assignments {
            let a = a.as_ref();
            let (key, raw) = a
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {a:?} is not key=value")))?;
            let (section, field) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("override key {key:?} is not section.key")))?;
            let value = parse_value(raw.trim());
            let sec = table
                .get_mut(section)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| Error::Config(format!("unknown config section {section:?}")))?;
            sec.insert(field.to_string(), value);
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `SAC_OIE_TRAIN_EPOCHS=5` sets `train.epochs`.
    pub fn env_overrides<I: IntoIterator<Item = (String, String)>>(vars: I) -> Vec<String> {
        let mut out: Vec<String> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                let rest = k.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
                let (section, field) = rest.split_once('_')?;
                Some(format!("{section}.{field}={v}"))
            })
            .collect();
        out.sort();
        out
    }

    pub fn inventory(&self) -> Result<ChunkInventory> {
        ChunkInventory::by_name(&self.model.inventory)
    }

    pub fn chunker_settings(&self) -> Result<ChunkerSettings> {
        Ok(ChunkerSettings {
            d_h: self.model.d_h,
            alpha: self.model.alpha,
            inventory: self.inventory()?,
        })
    }

    pub fn oie_settings(&self) -> Result<OieSettings> {
        Ok(OieSettings {
            d_h: self.model.d_h,
            d_l: self.model.d_l,
            gcn_layers: self.model.gcn_layers,
            arg_roles: self.model.arg_roles,
            inventory: self.inventory()?,
        })
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
