//! Plain `key = value` run configuration with command-line overrides.
//!
//! Every subcommand resolves its parameters through a [`Settings`]: a
//! flag beats the config file, which beats the built-in default, and
//! whatever wins is recorded so the effective configuration can be
//! written next to the run's outputs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl Settings {
    /// Loads `key = value` lines; `#` starts a comment, blanks are skipped.
    pub fn load(path: Option<&Path>) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let Some(path) = path else { return Ok(s) };
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    no + 1
                )));
            };
            s.file.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(s)
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key `{key}`: bad value `{raw}`"))
            }),
        }
    }

    /// Flag beats file beats default; the winner is recorded.
    pub fn pick<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.used.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn pick_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.used.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    /// Required input path; must exist when the configuration resolves.
    pub fn pick_input(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        let p = self.pick_path(key, flag)?;
        if !p.exists() {
            return Err(CliError::Data(format!("{}: no such file", p.display())));
        }
        Ok(p)
    }

    /// Required path with no existence check (outputs).
    pub fn pick_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        let p = match flag {
            Some(p) => p,
            None => self
                .file
                .get(key)
                .map(PathBuf::from)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "missing required option --{key} (config key `{key}`)"
                    ))
                })?,
        };
        self.used.insert(key.to_string(), p.display().to_string());
        Ok(p)
    }

    pub fn pick_path_opt(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let p = flag.or_else(|| self.file.get(key).map(PathBuf::from))?;
        self.used.insert(key.to_string(), p.display().to_string());
        Some(p)
    }

    /// Records a value the command computed itself (derived defaults).
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.used.insert(key.to_string(), value.to_string());
    }

    /// Writes the resolved configuration as sorted `key = value` lines.
    pub fn write_resolved(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        for (k, v) in &self.used {
            out.push_str(&format!("{k} = {v}\n"));
        }
        let mut f = fs::File::create(path).map_err(|e| {
            CliError::Data(format!("cannot write {}: {e}", path.display()))
        })?;
        f.write_all(out.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }
}

/// Sidecar path for a single-file output: `trees.discbracket` gets its
/// resolved configuration at `trees.discbracket.cfg`.
pub fn cfg_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.cfg", out.display()))
}
