//! Flat `key = value` run configuration.
//!
//! Values are resolved in order: built-in defaults, the config file, `--set`
//! overrides, then dedicated command-line flags. The resolved map is echoed
//! and hashed so every report can be tied to the exact settings that made it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use vocomp::corpus::SplitRatios;
use vocomp::model::AlphaMode;
use vocomp::trainer::{NegativePolicy, TrainConfig, L2_COEFFICIENTS, LEARNING_RATES};

use crate::CliError;

/// Every recognised key with its default; an empty default means unset.
pub const KEYS: &[(&str, &str)] = &[
    ("batch_size", "100"),
    ("bootstrap", "1000"),
    ("dataset", ""),
    ("dim", "25"),
    ("dump", ""),
    ("fix_alpha", "none"),
    ("grid_l2", ""),
    ("grid_learning_rates", ""),
    ("grid_report", ""),
    ("k", "10"),
    ("l2", "1e-6"),
    ("learning_rate", "0.05"),
    ("level", "0.95"),
    ("log", ""),
    ("max_epochs", "30"),
    ("mode", "both"),
    ("model", ""),
    ("negatives", "per-epoch"),
    ("neighbors", "5"),
    ("report", ""),
    ("seed", "1"),
    ("split", "0.8,0.1,0.1"),
    ("split_seed", ""),
    ("tag", ""),
    ("task", "comp"),
    ("track", ""),
    ("trajectory", ""),
    ("tuples", ""),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::usage(msg)
}

impl RunConfig {
    pub fn defaults() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|&(k, v)| (k.to_owned(), v.to_owned()))
                .collect(),
        }
    }

    /// Parse config-file text on top of the current values.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_owned()) {
                return Err(usage(format!("{origin}:{}: duplicate key `{k}`", i + 1)));
            }
            self.set(k, v.trim())
                .map_err(|e| usage(format!("{origin}:{}: {}", i + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{pair}` is not `key=value`")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_owned();
                Ok(())
            }
            None => Err(usage(format!("unknown config key `{key}`"))),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known key")
    }

    pub fn opt(&self, key: &str) -> Option<&str> {
        Some(self.get(key)).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.opt(key)
            .ok_or_else(|| usage(format!("missing required setting `{key}`")))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.opt(key).map(PathBuf::from)
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.get(key);
        raw.parse()
            .map_err(|_| usage(format!("invalid value `{raw}` for `{key}`")))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| usage(format!("invalid list item `{s}` for `{key}`")))
            })
            .collect()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.parse("seed")
    }

    pub fn split_seed(&self) -> Result<u64, CliError> {
        match self.opt("split_seed") {
            Some(_) => self.parse("split_seed"),
            None => self.seed(),
        }
    }

    pub fn split_ratios(&self) -> Result<SplitRatios, CliError> {
        match self.list::<f64>("split")?[..] {
            [a, b, c] => SplitRatios::new(a, b, c).map_err(|e| usage(e.to_string())),
            _ => Err(usage("`split` needs three comma-separated ratios")),
        }
    }

    pub fn alpha_mode(&self) -> Result<AlphaMode, CliError> {
        match self.get("fix_alpha") {
            "" | "none" => Ok(AlphaMode::Learned),
            _ => Ok(AlphaMode::Fixed(self.parse("fix_alpha")?)),
        }
    }

    pub fn negatives(&self) -> Result<NegativePolicy, CliError> {
        match self.get("negatives") {
            "per-epoch" => Ok(NegativePolicy::PerEpoch),
            "fixed" => Ok(NegativePolicy::Fixed),
            other => Err(usage(format!(
                "`negatives` must be per-epoch or fixed, got `{other}`"
            ))),
        }
    }

    /// Training settings; `track` is resolved later against the lexicon.
    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let config = TrainConfig {
            dim: self.parse("dim")?,
            batch_size: self.parse("batch_size")?,
            learning_rate: self.parse("learning_rate")?,
            l2: self.parse("l2")?,
            k: self.parse("k")?,
            max_epochs: self.parse("max_epochs")?,
            seed: self.seed()?,
            negatives: self.negatives()?,
            alpha_mode: self.alpha_mode()?,
            track: Vec::new(),
        };
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }

    pub fn grid(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let lrs = match self.opt("grid_learning_rates") {
            Some(_) => self.list("grid_learning_rates")?,
            None => LEARNING_RATES.to_vec(),
        };
        let l2s = match self.opt("grid_l2") {
            Some(_) => self.list("grid_l2")?,
            None => L2_COEFFICIENTS.to_vec(),
        };
        Ok((lrs, l2s))
    }

    /// Tuple files, comma-separated.
    pub fn tuple_paths(&self) -> Result<Vec<PathBuf>, CliError> {
        let raw = self.require("tuples")?;
        Ok(raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .collect())
    }

    /// `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Fail with a usage error unless every path exists.
pub fn check_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    for p in paths {
        if !p.exists() {
            return Err(usage(format!("input file not found: {}", p.display())));
        }
    }
    Ok(())
}
