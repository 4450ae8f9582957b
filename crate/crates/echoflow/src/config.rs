//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. Every key has a default except
//! `seed`, which must be given. Values set on the command line replace
//! values from the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{IoError, Result};

/// `(key, default)`. An empty default means "unset".
pub const KEYS: &[(&str, &str)] = &[
    ("seed", ""),
    ("out_dir", "out"),
    ("threads", "0"),
    // synthetic corpora
    ("synth_corpus", "planted"),
    ("flows_per_class", "500"),
    ("synth_tau", "1.0"),
    ("onset", "2.5"),
    ("flow_spacing", "0.01"),
    // ingest
    ("packets", ""),
    ("dataset", ""),
    ("tau", "1.0"),
    ("min_packets", "0"),
    ("min_bytes", "0"),
    ("min_duration", "0"),
    ("balance", "true"),
    // representation
    ("repr", "dist"),
    ("n_size_bins", "5"),
    ("n_time_bins", "4"),
    ("size_cap", "1500"),
    ("repr_n", "16"),
    ("export_repr", "false"),
    // optimizer
    ("strategy", "ho"),
    ("outer_k", "5"),
    ("inner_k", "5"),
    ("tpe_iterations", "200"),
    ("tpe_startup", "20"),
    ("tpe_gamma", "0.25"),
    ("tpe_candidates", "24"),
    ("greedy_stride", "10"),
    ("fs_resolutions", "10,20,50,100,200,500,1500"),
    ("flow_weighted", "false"),
    ("optimize_time", "false"),
    ("time_grid_cells", "100"),
    // classifier
    ("binning", ""),
    ("learning_rate", "0.1"),
    ("epochs", "300"),
    ("l2_lambda", "0.0001"),
    ("batch_size", "4096"),
    ("k", "5"),
    // early classification
    ("schedule_mode", "doubling"),
    ("tau_1", "0.625"),
    ("stages", "4"),
    ("time_bins", "uniform"),
    ("alpha", "0.05"),
    ("alphas", "0,0.01,0.02,0.05,0.1"),
    ("profile_steps", "50"),
    // explain
    ("explain_domain", "size"),
    ("time_resolution", "0.01"),
    // bench
    ("bench_seconds", "60"),
    ("bench_batch", "1000"),
    ("flow_rate", "1000000"),
    ("memory_n", "5"),
    ("memory_tau", "15"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl RunConfig {
    /// Defaults only.
    pub fn defaults() -> Self {
        let values = KEYS
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        RunConfig { values }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::defaults();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| IoError::ConfigSyntax { line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, found `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !known(k) {
                return Err(bad(format!("unknown key `{k}`")));
            }
            if seen.insert(k.to_string(), i + 1).is_some() {
                return Err(bad(format!("duplicate key `{k}`")));
            }
            cfg.values.insert(k.to_string(), v.to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::open(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known(key) {
            return Err(IoError::ConfigValue {
                key: key.into(),
                msg: "unknown key".into(),
            });
        }
        self.values.insert(key.into(), value.trim().into());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| IoError::ConfigValue {
            key: pair.into(),
            msg: "override must look like key=value".into(),
        })?;
        self.set(k.trim(), v)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(known(key), "{key}");
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key).ok_or_else(|| IoError::ConfigValue {
            key: key.into(),
            msg: "missing value".into(),
        })?;
        raw.parse().map_err(|e: T::Err| IoError::ConfigValue {
            key: key.into(),
            msg: format!("cannot parse `{raw}`: {e}"),
        })
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key).ok_or_else(|| IoError::ConfigValue {
            key: key.into(),
            msg: "a path is required for this command".into(),
        })
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key).unwrap_or("");
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e: T::Err| IoError::ConfigValue {
                    key: key.into(),
                    msg: format!("cannot parse `{s}`: {e}"),
                })
            })
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        if self.raw("seed").is_none() {
            return Err(IoError::ConfigValue {
                key: "seed".into(),
                msg: "seed is mandatory".into(),
            });
        }
        self.get("seed")
    }

    /// Every resolved key, sorted, as `key = value` lines.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Hex SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = RunConfig::parse("# run\nseed = 7\nstrategy = stat  # inline\n\nn_size_bins=8\n").unwrap();
        assert_eq!(c.seed().unwrap(), 7);
        assert_eq!(c.raw("strategy"), Some("stat"));
        assert_eq!(c.get::<usize>("n_size_bins").unwrap(), 8);
        assert_eq!(c.get::<usize>("epochs").unwrap(), 300);
        c.set_pair("strategy=ho").unwrap();
        assert_eq!(c.raw("strategy"), Some("ho"));
    }

    #[test]
    fn errors() {
        assert!(RunConfig::parse("bogus = 1").unwrap_err().to_string().contains("line 1"));
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("just words").is_err());
        assert!(RunConfig::defaults().seed().is_err());
        let c = RunConfig::parse("seed = x").unwrap();
        assert!(c.seed().is_err());
    }

    #[test]
    fn hash_tracks_values() {
        let a = RunConfig::parse("seed = 1").unwrap();
        let b = RunConfig::parse("seed=1\n").unwrap();
        let c = RunConfig::parse("seed = 2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn lists() {
        let c = RunConfig::parse("seed = 1\nalphas = 0, 0.5,1").unwrap();
        assert_eq!(c.list::<f64>("alphas").unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
