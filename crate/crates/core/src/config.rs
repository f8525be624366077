//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored, keys are case-sensitive and
//! must be known, and a key may appear once per file. Command-line flags are
//! layered on top with [`RunConfig::set`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub const SINGLE_BAND_PRESET: &str = include_str!("../presets/single_band.conf");
pub const DUAL_BAND_PRESET: &str = include_str!("../presets/dual_band.conf");

/// Geometry carried into design metadata verbatim (SI units, angles in
/// degrees).
pub const GEOMETRY_KEYS: &[&str] = &[
    "ws_m",
    "ls_m",
    "ds_m",
    "wp_m",
    "s_m",
    "d_m",
    "ws_prime_m",
    "ls_prime_m",
    "ds_prime_m",
    "s_prime_m",
    "lc_m",
    "wc_m",
    "phi1_deg",
    "phi2_deg",
    "phi_c_deg",
];

const RUN_KEYS: &[&str] = &[
    "kind",
    "radius_m",
    "eps_eff",
    "fit_mode",
    "fit_freq_hz",
    "f_target_hz",
    "f_max_hz",
    "mode",
    "orientation",
    "n_rho",
    "n_phi",
    "null_tol",
    "f_start_hz",
    "f_stop_hz",
    "points",
    "notch_q",
    "cm_leakage_db",
    "cm_q",
    "fp1_hz",
    "fp2_hz",
    "f0_hz",
    "k",
    "sign",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownFlag(String),
    #[error("`{key}`: cannot parse `{value}` as {expected}")]
    Value {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("missing required setting `{0}`")]
    Missing(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

pub fn is_known_key(key: &str) -> bool {
    RUN_KEYS.contains(&key) || GEOMETRY_KEYS.contains(&key)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !is_known_key(key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Overrides `key`; used for command-line flags.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) -> Result<(), ConfigError> {
        if !is_known_key(key) {
            return Err(ConfigError::UnknownFlag(key.to_string()));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_opt<T: fmt::Display>(&mut self, key: &str, value: Option<T>) -> Result<(), ConfigError> {
        match value {
            Some(v) => self.set(key, v),
            None => Ok(()),
        }
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::Value {
                key: key.to_string(),
                value: v.clone(),
                expected,
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key, "a non-negative integer")
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// An `n,i` pair such as `3,1`.
    pub fn index_pair(&self, key: &str) -> Result<Option<(u32, u32)>, ConfigError> {
        let Some(v) = self.values.get(key) else {
            return Ok(None);
        };
        parse_index_pair(v)
            .map(Some)
            .ok_or_else(|| ConfigError::Value {
                key: key.to_string(),
                value: v.clone(),
                expected: "an `n,i` pair",
            })
    }

    /// Geometry entries present in the config.
    pub fn geometry(&self) -> Result<BTreeMap<String, f64>, ConfigError> {
        let mut out = BTreeMap::new();
        for key in GEOMETRY_KEYS {
            if let Some(v) = self.f64(key)? {
                out.insert((*key).to_string(), v);
            }
        }
        Ok(out)
    }
}

pub fn parse_index_pair(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut c = RunConfig::parse("# header\nradius_m = 16e-3  # patch\n\nkind=dual\n").unwrap();
        assert_eq!(c.f64("radius_m").unwrap(), Some(0.016));
        assert_eq!(c.raw("kind"), Some("dual"));
        c.set("radius_m", 0.02).unwrap();
        assert_eq!(c.f64("radius_m").unwrap(), Some(0.02));
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(RunConfig::parse("radius_m 16e-3"), Err(ConfigError::Syntax { line: 1 }));
        assert!(matches!(RunConfig::parse("colour = red"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(
            RunConfig::parse("kind = a\nkind = b"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        let c = RunConfig::parse("radius_m = wide").unwrap();
        assert!(c.f64("radius_m").is_err());
    }

    #[test]
    fn index_pairs() {
        let c = RunConfig::parse("fit_mode = 1, 1\nmode = 3").unwrap();
        assert_eq!(c.index_pair("fit_mode").unwrap(), Some((1, 1)));
        assert!(c.index_pair("mode").is_err());
    }

    #[test]
    fn presets_parse() {
        for text in [SINGLE_BAND_PRESET, DUAL_BAND_PRESET] {
            let c = RunConfig::parse(text).unwrap();
            assert_eq!(c.f64("radius_m").unwrap(), Some(0.016));
            assert_eq!(c.f64("f_target_hz").unwrap(), Some(2.77e9));
            assert_eq!(c.geometry().unwrap()["ls_m"], 11.6e-3);
        }
    }
}
