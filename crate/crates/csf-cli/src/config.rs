//! Flat `key = value` experiment configs with strict key checking.

use csf_core::{CsfError, Result};
use ini::Ini;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Reads `path` (if any), applies `key=value` overrides and rejects any
    /// key outside `allowed`.
    pub fn load(path: Option<&Path>, overrides: &[String], allowed: &[&str]) -> Result<Config> {
        let mut values = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CsfError::Io(format!("{}: {e}", p.display())))?;
            let ini = Ini::load_from_str(&text).map_err(|e| CsfError::Parse(format!("{}: {e}", p.display())))?;
            for (section, props) in ini.iter() {
                if let Some(s) = section {
                    return Err(CsfError::ConfigRejected(format!("sections are not supported: [{s}]")));
                }
                for (k, v) in props.iter() {
                    values.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CsfError::ConfigRejected(format!("override `{o}` is not key=value")))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        if let Some(k) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CsfError::ConfigRejected(format!(
                "unknown key `{k}`; allowed: {}",
                allowed.join(", ")
            )));
        }
        Ok(Config { values })
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.values.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CsfError::ConfigRejected(format!("`{key}` = `{v}` has the wrong type"))),
        }
    }

    /// A finite number, optionally bounded below (exclusive).
    pub fn num(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.get(key, default)?;
        if !v.is_finite() {
            return Err(CsfError::ConfigRejected(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.num(key, default)?;
        if v <= 0.0 {
            return Err(CsfError::ConfigRejected(format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CsfError::ConfigRejected(format!("`{key}` needs comma-separated numbers")))
                })
                .collect(),
        }
    }

    pub fn words(&self, key: &str) -> Vec<String> {
        self.values
            .get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_and_unknown_keys_fail() {
        let dir = std::env::temp_dir().join(format!("csf-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.ini");
        std::fs::write(&p, "# comment\nr0 = 2\nn = 64\n").unwrap();
        let c = Config::load(Some(&p), &["n=128".into()], &["r0", "n"]).unwrap();
        assert_eq!(c.get::<usize>("n", 0).unwrap(), 128);
        assert_eq!(c.num("r0", 1.0).unwrap(), 2.0);
        assert!(matches!(
            Config::load(Some(&p), &[], &["r0"]),
            Err(CsfError::ConfigRejected(_))
        ));
        assert!(Config::load(None, &["n=abc".into()], &["n"]).unwrap().get::<usize>("n", 0).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn lists_parse() {
        let c = Config::load(None, &["a=0, 1.5,2".into()], &["a"]).unwrap();
        assert_eq!(c.list("a", &[]).unwrap(), vec![0.0, 1.5, 2.0]);
    }
}
