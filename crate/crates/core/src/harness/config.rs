//! `key = value` experiment configuration with flag overrides.
//!
//! Lines are `key = value`; `#` starts a comment. Overrides replace file
//! values key by key. Grids are either comma lists (`0.9,0.95,1`) or
//! inclusive ranges `start:stop:step`.

use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Keys that change where or how fast a run happens but not its results.
const NON_RESULT_KEYS: [&str; 2] = ["threads", "output"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value, got {raw:?}", no + 1)));
            };
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            if cfg.values.insert(normalize_key(k), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", no + 1)));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize_key(key), value.into());
    }

    /// Applies `other` on top of `self`.
    pub fn merge(&mut self, other: &ExperimentConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("cannot parse {key} = {v:?}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "1" | "yes" | "on") => Ok(true),
            Some("false" | "0" | "no" | "off") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key} = {v:?} is not a boolean"))),
        }
    }

    /// A grid of reals; errors if missing or empty.
    pub fn grid(&self, key: &str) -> Result<Vec<f64>> {
        parse_grid(self.require_str(key)?).map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<String>> {
        let v: Vec<String> = self
            .require_str(key)?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if v.is_empty() {
            return Err(Error::Config(format!("{key} is empty")));
        }
        Ok(v)
    }

    /// Master seed. There is deliberately no default.
    pub fn seed(&self) -> Result<u64> {
        self.require("seed")
    }

    /// Hex SHA-256 over the sorted result-relevant entries.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.values {
            if NON_RESULT_KEYS.contains(&k.as_str()) {
                continue;
            }
            h.update(k.as_bytes());
            h.update([0]);
            h.update(v.as_bytes());
            h.update([0]);
        }
        let digest = h.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Flags use dashes, files may use either.
fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `a,b,c` or inclusive `start:stop:step`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Config(m);
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let vals = match parts.len() {
        1 => s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|_| bad(format!("bad number {p:?}"))))
            .collect::<Result<Vec<_>>>()?,
        3 => {
            let num = |p: &str| p.parse::<f64>().map_err(|_| bad(format!("bad number {p:?}")));
            let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step.is_finite() && step != 0.0) || (b - a) / step < -1e-9 {
                return Err(bad(format!("range {s:?} is empty or has a bad step")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 10_000_000 {
                return Err(bad(format!("range {s:?} is too long")));
            }
            (0..count).map(|i| round12(a + i as f64 * step)).collect()
        }
        _ => return Err(bad(format!("cannot parse grid {s:?}"))),
    };
    if vals.is_empty() {
        return Err(bad("empty grid".into()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(bad(format!("non-finite value in {s:?}")));
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = ExperimentConfig::parse("# sweep\nseed = 5\nframes=100 # per point\n\nbeta = 0.9:1.0:0.05\n").unwrap();
        assert_eq!(c.seed().unwrap(), 5);
        assert_eq!(c.require::<usize>("frames").unwrap(), 100);
        assert_eq!(c.grid("beta").unwrap(), vec![0.9, 0.95, 1.0]);
        let mut o = ExperimentConfig::new();
        o.set("frames", "7");
        o.set("max-iter", "3");
        c.merge(&o);
        assert_eq!(c.require::<usize>("frames").unwrap(), 7);
        assert_eq!(c.require::<usize>("max_iter").unwrap(), 3);
    }

    #[test]
    fn errors() {
        assert!(ExperimentConfig::parse("seed").is_err());
        assert!(ExperimentConfig::parse("a=1\na=2").is_err());
        assert!(ExperimentConfig::parse(" = 3").is_err());
        let c = ExperimentConfig::parse("x = abc\nb = maybe").unwrap();
        assert!(c.seed().is_err());
        assert!(c.require::<f64>("x").is_err());
        assert!(c.get_bool("b", false).is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1,x").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("-16:0:2").unwrap().len(), 9);
        assert_eq!(parse_grid("1,2, 3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0.9:1:0.01").unwrap().len(), 11);
        assert_eq!(parse_grid("0.9:1:0.01").unwrap()[1], 0.91);
        assert_eq!(parse_grid("5:0:-2.5").unwrap(), vec![5.0, 2.5, 0.0]);
    }

    #[test]
    fn hash_ignores_threads_and_output() {
        let a = ExperimentConfig::parse("seed=1\nthreads=1\noutput=a.csv").unwrap();
        let b = ExperimentConfig::parse("seed=1\nthreads=8\noutput=b.csv").unwrap();
        let c = ExperimentConfig::parse("seed=2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
