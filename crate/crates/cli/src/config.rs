use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

const KNOWN: &[&str] = &[
    "horizon", "test", "mode", "level", "margin", "safety-margin", "c-grid", "tail-fraction", "out", "traces",
    "seed", "k", "s", "c", "n0", "range", "a-start", "eps", "alpha", "escape-level", "trials", "step-cap",
    "lambda", "mu", "drift-alpha", "no-timestamp",
];

/// `key = value` lines; `#` starts a comment. Keys use the long flag names.
#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { line: 0, msg: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            let key = k.trim().to_ascii_lowercase().replace('_', "-");
            if !KNOWN.contains(&key.as_str()) {
                return Err(CliError::Config { line: i + 1, msg: format!("unknown key {key:?}") });
            }
            values.insert(key, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config { line: 0, msg: format!("{key} = {v:?}: {e}") })
            })
            .transpose()
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

/// Integer count that also accepts `1e6` and `1_000_000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Count(pub u64);

impl FromStr for Count {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().replace('_', "");
        if let Ok(v) = t.parse::<u64>() {
            return Ok(Count(v));
        }
        let f: f64 = t.parse().map_err(|_| format!("not a count: {s:?}"))?;
        if f < 0.0 || f.fract() != 0.0 || f > 9.0e15 {
            return Err(format!("not a count: {s:?}"));
        }
        Ok(Count(f as u64))
    }
}

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Grid)
    }
}
