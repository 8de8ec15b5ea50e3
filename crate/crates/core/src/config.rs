//! Run configuration and its `key = value` file format.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid value for {key}: {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaConfig {
    pub n_pop: usize,
    pub n_pop_min: usize,
    pub decay: f64,
    pub epochs: usize,
    pub bpe_threshold: f64,
    pub p_div: f64,
    pub it_div: usize,
    pub noise_floor: f64,
    pub leaf_mix: f64,
    pub seed_generalize: f64,
    pub seeded_fraction: f64,
    pub max_depth: usize,
    pub mutation_depth: usize,
    pub use_bpe: bool,
    pub cache: bool,
    pub anchored_count: bool,
    pub workers: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            n_pop: 1000,
            n_pop_min: 200,
            decay: 0.97,
            epochs: 5000,
            bpe_threshold: 0.02,
            p_div: 0.9,
            it_div: 30,
            noise_floor: 0.05,
            leaf_mix: 0.5,
            seed_generalize: 0.5,
            seeded_fraction: 0.5,
            max_depth: 6,
            mutation_depth: 4,
            use_bpe: true,
            cache: true,
            anchored_count: false,
            workers: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_pop == 0 {
            return Err(invalid("n_pop", "must be positive"));
        }
        if self.n_pop_min == 0 || self.n_pop_min > self.n_pop {
            return Err(invalid("n_pop_min", "must be in 1..=n_pop"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(invalid("decay", "must be in (0, 1]"));
        }
        if !(self.bpe_threshold > 0.0 && self.bpe_threshold <= 1.0) {
            return Err(invalid("bpe_threshold", "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.p_div) {
            return Err(invalid("p_div", "must be in [0, 1]"));
        }
        if self.it_div == 0 {
            return Err(invalid("it_div", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise_floor) {
            return Err(invalid("noise_floor", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.leaf_mix) {
            return Err(invalid("leaf_mix", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.seed_generalize) {
            return Err(invalid("seed_generalize", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.seeded_fraction) {
            return Err(invalid("seeded_fraction", "must be in [0, 1]"));
        }
        if self.max_depth < 2 {
            return Err(invalid("max_depth", "must be at least 2"));
        }
        if self.mutation_depth == 0 || self.mutation_depth > self.max_depth {
            return Err(invalid("mutation_depth", "must be in 1..=max_depth"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        fn flag(v: &str) -> Result<bool, String> {
            match v {
                "true" | "on" | "1" => Ok(true),
                "false" | "off" | "0" => Ok(false),
                _ => Err(format!("expected a boolean, got {v:?}")),
            }
        }
        match key {
            "n_pop" => self.n_pop = num(value)?,
            "n_pop_min" => self.n_pop_min = num(value)?,
            "decay" => self.decay = num(value)?,
            "epochs" => self.epochs = num(value)?,
            "bpe_threshold" => self.bpe_threshold = num(value)?,
            "p_div" => self.p_div = num(value)?,
            "it_div" => self.it_div = num(value)?,
            "noise_floor" => self.noise_floor = num(value)?,
            "leaf_mix" => self.leaf_mix = num(value)?,
            "seed_generalize" => self.seed_generalize = num(value)?,
            "seeded_fraction" => self.seeded_fraction = num(value)?,
            "max_depth" => self.max_depth = num(value)?,
            "mutation_depth" => self.mutation_depth = num(value)?,
            "use_bpe" => self.use_bpe = flag(value)?,
            "cache" => self.cache = flag(value)?,
            "anchored_count" => self.anchored_count = flag(value)?,
            "workers" => self.workers = num(value)?,
            "seed" => self.seed = num(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Overlays settings from config text onto `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: "expected key = value".into(),
                });
            };
            self.set(k.trim(), v.trim())
                .map_err(|msg| ConfigError::Syntax { line: i + 1, msg })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        text.parse()
    }
}

impl FromStr for GaConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut c = GaConfig::default();
        c.apply_str(text)?;
        c.validate()?;
        Ok(c)
    }
}
