//! Flat key=value configuration file, merged under command-line flags.
//!
//! A config file supplies defaults for any flag of any subcommand; a flag
//! given on the command line always wins. The file path comes from
//! `--config` or, failing that, the `HOTSPOT_CONFIG` environment variable.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored. Keys use the flag spellings (`n-cells`, `top-k`, …).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Result;
use hotspot_core::calendar::{days_from_civil, HourStamp, Month};
use hotspot_core::Error;

/// Every key a config file may set. Unknown keys are rejected so that a typo
/// surfaces as an error instead of a silently ignored setting.
const KNOWN_KEYS: [&str; 27] = [
    "cells",
    "corr-threshold",
    "crimes",
    "features",
    "hourly",
    "include-zero-cells",
    "kurtosis",
    "labels",
    "model",
    "month",
    "mtry",
    "n-cells",
    "n-hours",
    "n-profiles",
    "out",
    "predictions",
    "profiles",
    "ranking",
    "seed",
    "signal",
    "split",
    "start",
    "synthetic",
    "threads",
    "top-k",
    "trees",
    "train-fraction",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    /// Where the values came from, for error messages.
    source: Option<PathBuf>,
}

impl ConfigFile {
    /// Load from the `--config` flag if given, else from `HOTSPOT_CONFIG`,
    /// else return an empty configuration.
    pub fn load(explicit: Option<&Path>) -> Result<ConfigFile> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os("HOTSPOT_CONFIG").map(PathBuf::from),
        };
        match path {
            Some(p) => Self::parse_file(&p),
            None => Ok(ConfigFile::default()),
        }
    }

    fn parse_file(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key = value, got {raw:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key {key:?}",
                    path.display(),
                    i + 1
                ))
                .into());
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!(
                    "{}:{}: key {key:?} set twice",
                    path.display(),
                    i + 1
                ))
                .into());
            }
        }
        Ok(ConfigFile {
            values,
            source: Some(path.to_path_buf()),
        })
    }

    fn describe(&self, key: &str) -> String {
        match &self.source {
            Some(p) => format!("{key:?} in {}", p.display()),
            None => format!("{key:?}"),
        }
    }

    /// Flag value if present, else the parsed config value, else none.
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("cannot parse {} = {raw:?}", self.describe(key))).into()
            }),
        }
    }

    /// Like [`get`](Self::get) with a default for when neither side sets it.
    pub fn get_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    /// A setting that must come from the flag or the file.
    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str, flag_name: &str) -> Result<T> {
        self.get(flag, key)?.ok_or_else(|| {
            Error::Config(format!(
                "missing required setting: pass {flag_name} or set {key:?} in the config file"
            ))
            .into()
        })
    }

    /// Boolean switch: a bare flag or a true/false config value.
    pub fn get_flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.values.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(Error::Config(format!(
                "cannot parse {} = {other:?} as a boolean",
                self.describe(key)
            ))
            .into()),
        }
    }
}

/// `YYYY-MM` → calendar month.
pub fn parse_month(s: &str) -> Result<Month> {
    let parse = || -> Option<Month> {
        let (y, m) = s.split_once('-')?;
        Month::new(y.parse().ok()?, m.parse().ok()?).ok()
    };
    parse().ok_or_else(|| {
        Error::Config(format!("cannot parse month {s:?}; expected YYYY-MM")).into()
    })
}

/// `YYYY-MM-DD` → the midnight UTC hour starting that day.
pub fn parse_start_day(s: &str) -> Result<HourStamp> {
    let parse = || -> Option<HourStamp> {
        let mut parts = s.splitn(3, '-');
        let y: i32 = parts.next()?.parse().ok()?;
        let m: u32 = parts.next()?.parse().ok()?;
        let d: u32 = parts.next()?.parse().ok()?;
        if !(1..=12).contains(&m) || !(1..=31).contains(&d) {
            return None;
        }
        Some(HourStamp(days_from_civil(y, m, d) * 24))
    };
    parse().ok_or_else(|| {
        Error::Config(format!("cannot parse date {s:?}; expected YYYY-MM-DD")).into()
    })
}
