//! `key = value` configuration files.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Vectors are comma separated (`pos_source = 200.7,140.6,50.2`). A key may
//! appear once unless the consumer reads it as a list.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::geometry::Position3D;
use crate::{Error, Result};

/// Parsed file: each key maps to its value and line number.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config { line: line_no, message: "empty key".into() });
            }
            if entries.insert(key.clone(), (v.trim().to_string(), line_no)).is_some() {
                return Err(Error::Config { line: line_no, message: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.1)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.0.as_str())
    }

    fn err(&self, key: &str, message: String) -> Error {
        Error::Config { line: self.line(key), message }
    }

    /// Parse a scalar if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(key, format!("cannot parse `{v}` for `{key}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Parse a comma-separated list if present.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<T>().map_err(|_| self.err(key, format!("cannot parse `{x}` in `{key}`"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn position(&self, key: &str) -> Result<Option<Position3D>> {
        match self.list::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 3 => Ok(Some(Position3D::new(v[0], v[1], v[2]))),
            Some(v) => Err(self.err(key, format!("`{key}` needs three coordinates, got {}", v.len()))),
        }
    }

    /// Fail on any key outside `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !known.contains(&k) {
                return Err(self.err(k, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

/// Convert dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
