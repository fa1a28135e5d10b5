//! `key = value` configuration files.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Keys use the long flag names of the command they configure (e.g. `n`,
//! `shape`, `lambda-grid`). Unknown keys are an error, and values given on
//! the command line override file values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, known_keys: &[&str]) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected 'key = value', got '{raw}'", lineno + 1);
            };
            let key = key.trim().to_string();
            if !known_keys.contains(&key.as_str()) {
                bail!(
                    "config line {}: unknown key '{key}' (known keys: {})",
                    lineno + 1,
                    known_keys.join(", ")
                );
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Flag value if given, else the parsed file value, else `None`.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key '{key}': {e}"),
            },
        }
    }

    /// Boolean keys: a flag presence wins; file values are true/false.
    pub fn resolve_flag(&self, flag: bool, key: &str) -> anyhow::Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.entries.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => bail!("config key '{key}': expected true/false, got '{other}'"),
        }
    }
}

/// Comma-separated list of reals.
pub fn parse_csv_f64(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number '{t}'")))
        .collect()
}

/// Comma-separated list of sample sizes.
pub fn parse_csv_usize(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad count '{t}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nn = 12\nshape = square  # trailing").unwrap();
        let cfg = FileConfig::load(Some(f.path()), &["n", "shape"]).unwrap();
        assert_eq!(cfg.resolve::<usize>(None, "n").unwrap(), Some(12));
        assert_eq!(cfg.resolve::<String>(None, "shape").unwrap(), Some("square".into()));
        // flag overrides file
        assert_eq!(cfg.resolve::<usize>(Some(5), "n").unwrap(), Some(5));
        assert!(FileConfig::load(Some(f.path()), &["n"]).is_err());
    }
}
