//! Parameter resolution: command defaults, then a preset, then a
//! `key = value` config file, then explicit flags. Later layers win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A bad flag, config key or value. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Fully resolved parameters of one command, keyed by flag name without
/// the leading dashes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    values: BTreeMap<String, String>,
}

impl ParamSet {
    #[cfg(test)]
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> Self {
        ParamSet {
            values: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn from_map(values: BTreeMap<String, String>) -> Self {
        ParamSet { values }
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Overlays `layer`; every key must already exist in `self`.
    pub fn overlay(&mut self, layer: &BTreeMap<String, String>, origin: &str) -> anyhow::Result<()> {
        for (k, v) in layer {
            match self.values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => return Err(usage(format!("{origin}: `{k}` is not a parameter of this command"))),
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> anyhow::Result<T> {
        let raw = self.raw(key);
        raw.trim()
            .parse()
            .map_err(|_| usage(format!("--{key}: cannot parse `{raw}`")))
    }

    pub fn flag(&self, key: &str) -> anyhow::Result<bool> {
        match self.raw(key).trim() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" | "" => Ok(false),
            other => Err(usage(format!("--{key}: expected true or false, got `{other}`"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> anyhow::Result<Vec<T>> {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| usage(format!("--{key}: cannot parse `{}`", item.trim())))
            })
            .collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys may use `_` or
/// `-`.
pub fn parse_config(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(usage(format!("config line {}: empty key", lineno + 1)));
        }
        out.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("--config: cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let map = parse_config("# header\nv_max = 4.5  # trailing\n\nbeta=-1\n").unwrap();
        assert_eq!(map["v-max"], "4.5");
        assert_eq!(map["beta"], "-1");
        assert!(parse_config("nonsense").is_err());
    }

    #[test]
    fn overlay_rejects_unknown_keys() {
        let mut p = ParamSet::from_pairs([("beta", "0".to_string())]);
        let mut layer = BTreeMap::new();
        layer.insert("beta".to_string(), "-2".to_string());
        p.overlay(&layer, "flags").unwrap();
        assert_eq!(p.get::<f64>("beta").unwrap(), -2.0);
        layer.insert("gamma".to_string(), "-1".to_string());
        assert!(p.overlay(&layer, "flags").is_err());
    }

    #[test]
    fn typed_getters_name_the_flag() {
        let p = ParamSet::from_pairs([("n-grid", "abc".to_string()), ("betas", "0, -1.5".to_string())]);
        let err = p.get::<usize>("n-grid").unwrap_err().to_string();
        assert!(err.contains("--n-grid"));
        assert_eq!(p.list::<f64>("betas").unwrap(), vec![0.0, -1.5]);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -150.0, 1.0 / 3.0, 1e-300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
