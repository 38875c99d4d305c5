//! Flat `key=value` run configuration. Keys are flag names without the
//! leading dashes (`steps=2000`, `batch-clips=8`); command-line flags win.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| Error::Malformed {
                what: "config",
                line: i + 1,
                reason: reason.to_string(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| malformed("expected key=value"))?;
            let key = key.trim().trim_start_matches("--");
            if key.is_empty() {
                return Err(malformed("empty key"));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(malformed(&format!("duplicate key {key:?}")));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Rejects keys outside `allowed`, so typos do not silently fall back to defaults.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::invalid(format!(
                "config key {k:?} is not used by this command (expected one of {allowed:?})"
            ))),
            None => Ok(()),
        }
    }

    /// The flag value if present, else the parsed config value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::invalid(format!("config value {key}={v}: {e}")))
            })
            .transpose()
    }
}

/// Ordered `key=value` lines describing a fully resolved run.
#[derive(Debug, Clone, Default)]
pub struct Resolved(Vec<(String, String)>);

impl Resolved {
    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_take_precedence() {
        let cfg = RunConfig::parse("# run\nsteps = 300\n--seed=9\n\nmode=temporal\n").unwrap();
        assert_eq!(cfg.pick(Some(5usize), "steps").unwrap(), Some(5));
        assert_eq!(cfg.pick(None::<usize>, "steps").unwrap(), Some(300));
        assert_eq!(cfg.pick(None::<u64>, "seed").unwrap(), Some(9));
        assert_eq!(cfg.pick(None::<f64>, "lr").unwrap(), None);
        assert!(cfg.pick(None::<usize>, "mode").is_err());
    }

    #[test]
    fn malformed_lines_cite_line_number() {
        let e = RunConfig::parse("steps=1\nnonsense\n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(RunConfig::parse("a=1\na=2").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let cfg = RunConfig::parse("stpes=10").unwrap();
        assert!(cfg.check_keys(&["steps"]).is_err());
        assert!(RunConfig::default().check_keys(&["steps"]).is_ok());
    }
}
