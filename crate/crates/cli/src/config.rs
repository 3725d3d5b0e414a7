//! Flat dotted key-value configuration files.
//!
//! Format: one `key = value` per line, `#` starts a comment, values are
//! numbers, comma-separated number lists, or bare strings. Keys are grouped
//! by dotted prefixes (`geometry.`, `material.`, `limit1d.`, `full2d.`,
//! `diag.`, `clamp.`, `curve.`, `output.`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use griffith_beam_core::material::StoredEnergyModel;
use griffith_beam_core::math::Vec2;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parsed configuration: a sorted key-value map plus the seed, with typed
/// accessors and the invariants shared by every experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub entries: BTreeMap<String, String>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err(format!("line {}: empty key", lineno + 1)));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(err(format!("duplicate key {key}")));
            }
        }
        let mut cfg = ExperimentConfig { entries, seed: 0 };
        cfg.seed = cfg.get_u64("seed", 0)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let length = self.length()?;
        if !(length > 0.0) {
            return Err(err("geometry.length must be positive"));
        }
        let m = self.bound_m()?;
        if !(m > length.max(1.0)) {
            return Err(err("geometry.bound_m must exceed max(1, L)"));
        }
        if self.entries.contains_key("geometry.h_list") {
            let hs = self.h_list()?;
            if hs.is_empty() {
                return Err(err("geometry.h_list must not be empty"));
            }
            for w in hs.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(err("geometry.h_list must be strictly decreasing"));
                }
            }
            if hs.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
                return Err(err("geometry.h_list entries must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.entries
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| err(format!("{key}: not a number: {v}"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.entries
            .get(key)
            .ok_or_else(|| err(format!("missing required key {key}")))?
            .parse()
            .map_err(|_| err(format!("{key}: not a number")))
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| err(format!("{key}: not an integer: {v}"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.get_u64(key, default as u64)? as usize)
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| err(format!("{key}: bad list entry {p}")))
                })
                .collect(),
        }
    }

    pub fn get_vec2(&self, key: &str) -> Result<Option<Vec2>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(_) => {
                let v = self.get_f64_list(key)?;
                if v.len() != 2 {
                    return Err(err(format!("{key}: expected two components")));
                }
                Ok(Some(Vec2::new(v[0], v[1])))
            }
        }
    }

    pub fn length(&self) -> Result<f64, ConfigError> {
        self.get_f64("geometry.length", 1.0)
    }

    pub fn bound_m(&self) -> Result<f64, ConfigError> {
        self.get_f64("geometry.bound_m", 1e4)
    }

    pub fn h_list(&self) -> Result<Vec<f64>, ConfigError> {
        self.get_f64_list("geometry.h_list")
    }

    pub fn material(&self) -> Result<StoredEnergyModel, ConfigError> {
        let kind = self.get_str("material.kind", "quadratic_distance");
        match kind.as_str() {
            "quadratic_distance" => {
                StoredEnergyModel::quadratic_distance(self.get_f64("material.c_w", 1.0)?)
            }
            "svk" | "st_venant_kirchhoff" => StoredEnergyModel::st_venant_kirchhoff(
                self.get_f64("material.mu", 1.0)?,
                self.get_f64("material.lambda", 1.0)?,
            ),
            other => return Err(err(format!("unknown material.kind {other}"))),
        }
        .map_err(|e| err(e.to_string()))
    }

    /// Canonical content hash: every key-value pair plus the seed, in sorted
    /// key order. Identical configs always hash identically.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.entries {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(self.seed.to_le_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
