//! `key = value` experiment manifests merged with command-line flags.
//!
//! Flags win over file entries. Every key a command reads is recorded so the
//! resolved configuration can be echoed before any work starts, and file
//! keys the command never reads are rejected.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use lramimo::Error;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, (usize, String)>,
    flags: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

pub fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut settings = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            settings.file = parse_manifest(&text)?;
        }
        Ok(settings)
    }

    /// Records a flag value; it takes precedence over the file.
    pub fn flag<T: Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.flags.insert(key.to_string(), v.to_string());
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .map(String::as_str)
            .or_else(|| self.file.get(key).map(|(_, v)| v.as_str()))
    }

    fn record(&mut self, key: &str, shown: String) {
        self.resolved.push((key.to_string(), shown));
    }

    pub fn optional<T>(&mut self, key: &str) -> Result<Option<T>, Error>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(raw) = self.raw(key).map(str::to_string) else {
            return Ok(None);
        };
        let value = raw
            .trim()
            .parse::<T>()
            .map_err(|e| config_error(key, format!("cannot parse `{raw}`: {e}")))?;
        self.record(key, raw.trim().to_string());
        Ok(Some(value))
    }

    pub fn or<T>(&mut self, key: &str, default: T) -> Result<T, Error>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.optional(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str) -> Result<T, Error>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.optional(key)?
            .ok_or_else(|| config_error(key, format!("{key} required")))
    }

    /// Comma-separated list.
    pub fn list<T>(&mut self, key: &str, default: &str) -> Result<Vec<T>, Error>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.raw(key).unwrap_or(default).to_string();
        let items = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| config_error(key, format!("cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<T>, Error>>()?;
        self.record(key, raw.trim().to_string());
        Ok(items)
    }

    /// File keys that no lookup asked for.
    pub fn reject_unknown(&self) -> Result<(), Error> {
        for (key, (line, _)) in &self.file {
            if !self.resolved.iter().any(|(k, _)| k == key) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("unknown config key `{key}`"),
                });
            }
        }
        Ok(())
    }

    pub fn effective(&self) -> &[(String, String)] {
        &self.resolved
    }
}

/// Blank lines and `#` comments are skipped; later duplicates are an error.
pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, (usize, String)>, Error> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty key".into(),
            });
        }
        if out.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(out)
}
