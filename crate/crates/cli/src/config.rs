// SPDX-License-Identifier: Apache-2.0
//! Run configuration: a flat `key = value` file, overridden by flags.
//!
//! Keys: `crossbar_rows`, `crossbar_cols`, `ou_height`, `ou_width`,
//! `direction`, `strategy`, `baseline`, `seed`, `power_table`, `jobs`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use oumap::cost::{parse_key_values, PowerTable};
use oumap::plan::{CrossbarGeometry, Direction};
use oumap::reorder::{MappingStrategy, OuShape};

pub const KEYS: [&str; 10] = [
    "crossbar_rows",
    "crossbar_cols",
    "ou_height",
    "ou_width",
    "direction",
    "strategy",
    "baseline",
    "seed",
    "power_table",
    "jobs",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub crossbar_rows: Option<usize>,
    pub crossbar_cols: Option<usize>,
    pub ou_height: Option<usize>,
    pub ou_width: Option<usize>,
    pub direction: Option<Direction>,
    pub strategy: Option<MappingStrategy>,
    pub baseline: Option<MappingStrategy>,
    pub seed: Option<u64>,
    pub power_table: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| anyhow!(ConfigError(format!("bad value for {key}: '{value}'"))))
}

/// Invalid configuration; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigFile {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c = Self::default();
        for (key, value) in parse_key_values(text)? {
            match key.as_str() {
                "crossbar_rows" => c.crossbar_rows = Some(parse(&key, &value)?),
                "crossbar_cols" => c.crossbar_cols = Some(parse(&key, &value)?),
                "ou_height" => c.ou_height = Some(parse(&key, &value)?),
                "ou_width" => c.ou_width = Some(parse(&key, &value)?),
                "direction" => c.direction = Some(parse(&key, &value)?),
                "strategy" => c.strategy = Some(parse(&key, &value)?),
                "baseline" => c.baseline = Some(parse(&key, &value)?),
                "seed" => c.seed = Some(parse(&key, &value)?),
                "power_table" => c.power_table = Some(base.join(value)),
                "jobs" => c.jobs = Some(parse(&key, &value)?),
                _ => bail!(ConfigError(format!("unknown config key '{key}' (known: {})", KEYS.join(", ")))),
            }
        }
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Settings shared by every subcommand after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: CrossbarGeometry,
    /// Unset means horizontal when compiling, or the plan's own direction.
    pub direction: Option<Direction>,
    pub strategy: MappingStrategy,
    pub baseline: MappingStrategy,
    pub seed: u64,
    pub power: PowerTable,
}

/// Values given on the command line; `None` defers to the file, then to defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub crossbar_rows: Option<usize>,
    pub crossbar_cols: Option<usize>,
    pub ou_height: Option<usize>,
    pub ou_width: Option<usize>,
    pub direction: Option<Direction>,
    pub strategy: Option<MappingStrategy>,
    pub baseline: Option<MappingStrategy>,
    pub seed: Option<u64>,
    pub power_table: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(file: &ConfigFile, flags: &Overrides) -> Result<Self> {
        let d = CrossbarGeometry::default();
        let ou = OuShape::new(
            flags.ou_height.or(file.ou_height).unwrap_or(d.ou.height),
            flags.ou_width.or(file.ou_width).unwrap_or(d.ou.width),
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let geometry = CrossbarGeometry::new(
            flags.crossbar_rows.or(file.crossbar_rows).unwrap_or(d.crossbar_rows),
            flags.crossbar_cols.or(file.crossbar_cols).unwrap_or(d.crossbar_cols),
            ou,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let power = match flags.power_table.as_ref().or(file.power_table.as_ref()) {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading power table {}", path.display()))?;
                PowerTable::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
            }
            None => PowerTable::default(),
        };
        Ok(Self {
            geometry,
            direction: flags.direction.or(file.direction),
            strategy: flags.strategy.or(file.strategy).unwrap_or(MappingStrategy::Similarity),
            baseline: flags.baseline.or(file.baseline).unwrap_or(MappingStrategy::ZeroSkip),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            power,
        })
    }
}
