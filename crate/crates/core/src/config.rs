//! Pipeline configuration: a TOML file, dotted `key=value` overrides, and a
//! hash identifying the resolved result.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::TokenizerMode;
use crate::error::{Error, Result};
use crate::pointer_gen::PgConfig;
use crate::retrieval::DEFAULT_K;
use crate::upvote_scorer::{UsConfig, DEFAULT_ALPHA, DEFAULT_THRESHOLD};

pub const SEED_ENV: &str = "COMMENTFORGE_SEED";
pub const DEFAULT_SEED: u64 = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed; model seeds follow it.
    pub seed: u64,
    pub tokenizer: TokenizerMode,
    /// Articles retrieved per query.
    pub k: usize,
    pub alpha: f64,
    pub threshold: u64,
    pub us: UsConfig,
    pub pg: PgConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            tokenizer: TokenizerMode::CjkChar,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            threshold: DEFAULT_THRESHOLD,
            us: UsConfig::default(),
            pg: PgConfig::default(),
        }
    }
}

fn set_dotted(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| bad_key(key))?;
    let mut table = root;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| bad_key(key))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn bad_key(key: &str) -> Error {
    Error::InvalidArgument(format!("invalid configuration key {key:?}"))
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl PipelineConfig {
    /// Defaults, then `file`, then `overrides` (`key=value`, dotted keys
    /// address sections). The seed comes from the file or overrides, else
    /// from `COMMENTFORGE_SEED`, else the default.
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| Error::format(path, e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        if !table.contains_key("seed") {
            if let Ok(raw) = std::env::var(SEED_ENV) {
                let seed: u64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
                table.insert("seed".into(), toml::Value::Integer(seed as i64));
            }
        }
        let mut cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("configuration: {}", e.message())))?;
        cfg.propagate();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Copies the shared settings into the model sections.
    pub fn propagate(&mut self) {
        self.us.seed = self.seed;
        self.pg.seed = self.seed;
        self.us.tokenizer = self.tokenizer;
        self.pg.tokenizer = self.tokenizer;
        self.us.threshold = self.threshold;
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.threshold < 1 {
            return fail("threshold must be >= 1".into());
        }
        for (name, cap) in [("us.vocab_cap", self.us.vocab_cap), ("pg.vocab_cap", self.pg.vocab_cap)] {
            if cap < 5 {
                return fail(format!("{name} must be >= 5"));
            }
        }
        for (name, lr) in [("us.lr", self.us.lr), ("pg.lr", self.pg.lr)] {
            if lr <= 0.0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if self.pg.lr_decay <= 0.0 {
            return fail("pg.lr_decay must be positive".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_model_sections() {
        let c = PipelineConfig::default();
        assert_eq!((c.pg.emb_dim, c.pg.enc_hidden, c.pg.dec_hidden), (128, 256, 512));
        assert_eq!(c.pg.vocab_cap, 50_000);
        assert_eq!((c.pg.lr, c.pg.lr_decay), (1e-3, 0.5));
        assert_eq!((c.k, c.alpha, c.threshold), (5, 0.2, 10));
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 5\nalpha = 0.5\n[pg]\nepochs = 3\n").unwrap();
        let c = PipelineConfig::resolve(Some(&path), &["pg.epochs=7".into(), "tokenizer=whitespace".into()]).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.pg.seed, 5);
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.pg.epochs, 7);
        assert_eq!(c.pg.tokenizer, TokenizerMode::Whitespace);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::resolve(None, &["alpha=1.5".into()]).is_err());
        assert!(PipelineConfig::resolve(None, &["nonsense=1".into()]).is_err());
        assert!(PipelineConfig::resolve(None, &["k".into()]).is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.hash(), back.hash());
        let mut d = c.clone();
        d.k = 6;
        assert_ne!(c.hash(), d.hash());
    }
}
