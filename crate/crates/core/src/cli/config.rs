//! Flat key-value configuration files with section headers:
//!
//! ```text
//! # comment
//! [scenario]
//! name = decompose
//! seed = 42
//!
//! [decompose]
//! c2 = 100
//! bubbles = +1:1.0,-1:1e-4
//! ```
//!
//! No nesting; values are scalars, booleans, strings or comma-separated
//! lists, typed at the point of use.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, got: {text}")]
    Syntax { line: usize, text: String },
    #[error("missing required key [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("[{section}] {key} = {value}: expected {expected}")]
    BadValue {
        section: String,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("unknown scenario {0}; run the list subcommand for the registry")]
    UnknownScenario(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<(String, String), String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    entries.insert(
                        (section.clone(), k.trim().to_string()),
                        v.trim().to_string(),
                    );
                }
                None => {
                    return Err(ConfigError::Syntax {
                        line: lineno + 1,
                        text: line.to_string(),
                    })
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.entries
            .insert((section.to_string(), key.to_string()), value.to_string());
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.raw(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                expected: "a real number",
            }),
        }
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let v = self.require(section, key)?;
        v.parse().map_err(|_| ConfigError::BadValue {
            section: section.into(),
            key: key.into(),
            value: v.into(),
            expected: "a real number",
        })
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                expected: "a nonnegative integer",
            }),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                expected: "a nonnegative integer",
            }),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some("true") | Some("yes") | Some("1") => Ok(true),
            Some("false") | Some("no") | Some("0") => Ok(false),
            Some(v) => Err(ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                expected: "a boolean",
            }),
        }
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.raw(section, key).unwrap_or(default)
    }

    pub fn list_f64(&self, section: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
        let v = self.require(section, key)?;
        v.split(',')
            .map(|p| {
                p.trim().parse().map_err(|_| ConfigError::BadValue {
                    section: section.into(),
                    key: key.into(),
                    value: v.into(),
                    expected: "a comma-separated list of reals",
                })
            })
            .collect()
    }

    pub fn list_f64_or(
        &self,
        section: &str,
        key: &str,
        default: &[f64],
    ) -> Result<Vec<f64>, ConfigError> {
        if self.raw(section, key).is_none() {
            return Ok(default.to_vec());
        }
        self.list_f64(section, key)
    }

    /// Signed bubbles written as `+1:1.0,-1:1e-4`.
    pub fn bubble_list(&self, section: &str, key: &str) -> Result<Vec<(i8, f64)>, ConfigError> {
        let v = self.require(section, key)?;
        let mut out = Vec::new();
        for part in v.split(',') {
            let bad = || ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                expected: "sign:scale pairs like +1:1.0,-1:1e-4",
            };
            let (s, l) = part.trim().split_once(':').ok_or_else(bad)?;
            let sign: i8 = s.trim().parse().map_err(|_| bad())?;
            let scale: f64 = l.trim().parse().map_err(|_| bad())?;
            out.push((sign, scale));
        }
        Ok(out)
    }

    /// Every (section, key, value), sorted, for the manifest.
    pub fn entries(&self) -> impl Iterator<Item = (&(String, String), &String)> {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let c = Config::parse(
            "# hello\n[scenario]\nname = decompose\nseed = 7\n\n[decompose]\nc2 = 100\nbubbles = +1:1.0, -1:1e-4\nflag = true\n",
        )
        .unwrap();
        assert_eq!(c.require("scenario", "name").unwrap(), "decompose");
        assert_eq!(c.u64_or("scenario", "seed", 0).unwrap(), 7);
        assert_eq!(c.f64("decompose", "c2").unwrap(), 100.0);
        assert!(c.bool_or("decompose", "flag", false).unwrap());
        assert_eq!(
            c.bubble_list("decompose", "bubbles").unwrap(),
            vec![(1, 1.0), (-1, 1e-4)]
        );
    }

    #[test]
    fn reports_syntax_and_missing() {
        assert!(matches!(
            Config::parse("bogus line"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        let c = Config::parse("[a]\nx = 1\n").unwrap();
        assert!(matches!(
            c.require("a", "y"),
            Err(ConfigError::Missing { .. })
        ));
        assert!(matches!(
            c.f64("a", "x"),
            Ok(v) if v == 1.0
        ));
    }
}
