//! Settings from flags and from a flat `key = value` file; flags win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Settings {
    /// Flat key=value file supplying defaults for any flag below.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Window as `a:b`, both ends included.
    #[arg(long, global = true, value_name = "A:B", allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Levels to materialize (and to show in level dumps).
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    #[arg(long, global = true)]
    pub replicates: Option<u64>,
    #[arg(long, global = true)]
    pub positions: Option<u64>,
    #[arg(long, global = true)]
    pub nmax: Option<u32>,
    /// Longest backward coupling span.
    #[arg(long = "budget-backward", global = true)]
    pub budget_backward: Option<u64>,
    /// Deepest level the sampler may build.
    #[arg(long = "budget-level", global = true)]
    pub budget_level: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub significance: Option<f64>,
}

const KEYS: [&str; 11] = [
    "seed",
    "window",
    "depth",
    "replicates",
    "positions",
    "nmax",
    "budget-backward",
    "budget-level",
    "format",
    "out",
    "significance",
];

pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value", i + 1);
        };
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            bail!("config line {}: unknown key `{k}`", i + 1);
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")))
        .transpose()
}

impl Settings {
    /// Fills every unset flag from the config file, if one was given.
    pub fn resolve(mut self) -> Result<Settings> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let file = parse_file(&text)?;
        self.seed = self.seed.or(field(&file, "seed")?);
        self.window = self.window.or(field(&file, "window")?);
        self.depth = self.depth.or(field(&file, "depth")?);
        self.replicates = self.replicates.or(field(&file, "replicates")?);
        self.positions = self.positions.or(field(&file, "positions")?);
        self.nmax = self.nmax.or(field(&file, "nmax")?);
        self.budget_backward = self.budget_backward.or(field(&file, "budget-backward")?);
        self.budget_level = self.budget_level.or(field(&file, "budget-level")?);
        self.significance = self.significance.or(field(&file, "significance")?);
        self.out = self.out.or(field::<String>(&file, "out")?.map(PathBuf::from));
        if self.format.is_none() {
            if let Some(f) = file.get("format") {
                self.format = Some(Format::from_str(f, true).map_err(|e| anyhow::anyhow!("config key `format`: {e}"))?);
            }
        }
        Ok(self)
    }

    pub fn window(&self) -> Result<(i64, i64)> {
        parse_window(self.window.as_deref().unwrap_or("0:999"))
    }
}

pub fn parse_window(text: &str) -> Result<(i64, i64)> {
    let Some((a, b)) = text.split_once(':') else {
        bail!("window `{text}` is not of the form a:b");
    };
    let a: i64 = a.trim().parse().with_context(|| format!("window start `{a}`"))?;
    let b: i64 = b.trim().parse().with_context(|| format!("window end `{b}`"))?;
    if a > b {
        bail!("window {a}:{b} is empty");
    }
    Ok((a, b))
}

/// Where an output goes: `--out`, else the default directory from the
/// environment joined with `name`, else standard output.
pub fn destination(out: Option<&Path>, name: &str) -> Option<PathBuf> {
    if let Some(p) = out {
        return Some(p.to_path_buf());
    }
    std::env::var_os(crate::OUT_DIR_ENV).filter(|d| !d.is_empty()).map(|d| PathBuf::from(d).join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let f = parse_file("# comment\nseed = 7\nbudget_level=12\n\nwindow=-5:5\n").unwrap();
        assert_eq!(f["seed"], "7");
        assert_eq!(f["budget-level"], "12");
        assert_eq!(f["window"], "-5:5");
        assert!(parse_file("bogus=1").is_err());
        assert!(parse_file("seed").is_err());
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("0:999").unwrap(), (0, 999));
        assert_eq!(parse_window("-3:-1").unwrap(), (-3, -1));
        assert!(parse_window("5:1").is_err());
        assert!(parse_window("5").is_err());
    }
}
