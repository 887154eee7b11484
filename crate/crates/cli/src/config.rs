//! `key = value` configuration with `[section]` headers.
//!
//! Blank lines and text after `#` are ignored. Every key belongs to a
//! section; unknown sections, unknown keys and repeated keys are errors.
//! Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt;

use levy_ito::levy::MODEL_KEYS;

use crate::error::CliError;

const FUNCTION_KEYS: &[&str] = &["name"];
const CONTRACT_KEYS: &[&str] = &["r", "T", "K", "D", "t", "spots"];
const NUMERICS_KEYS: &[&str] = &[
    "seed",
    "n_paths",
    "t",
    "x0",
    "index",
    "quad_tol",
    "deltas",
    "inner_cutoff",
    "outer_cutoff",
    "epsilons",
    "dim",
    "points",
    "N_x",
    "N_t",
    "x_min_log",
    "monitoring",
];
const OUTPUT_KEYS: &[&str] = &["path", "lattice", "plot"];

fn section_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "model" => Some(MODEL_KEYS),
        "function" => Some(FUNCTION_KEYS),
        "contract" => Some(CONTRACT_KEYS),
        "numerics" => Some(NUMERICS_KEYS),
        "output" => Some(OUTPUT_KEYS),
        _ => None,
    }
}

/// Parsed configuration, in file order within each section.
#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, Vec<(String, String)>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        let mut current: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(format!("line {}: malformed section header `{line}`", n + 1)))?
                    .trim()
                    .to_ascii_lowercase();
                if section_keys(&name).is_none() {
                    return Err(CliError::config(format!("line {}: unknown section `[{name}]`", n + 1)));
                }
                cfg.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let section = current
                .as_ref()
                .ok_or_else(|| CliError::config(format!("line {}: key `{k}` appears before any [section]", n + 1)))?;
            let known = section_keys(section).expect("validated section");
            let canonical = if section == "model" {
                k.to_ascii_lowercase()
            } else {
                k.to_string()
            };
            if !known.contains(&canonical.as_str()) {
                return Err(CliError::config(format!(
                    "line {}: unknown key `{k}` in [{section}]",
                    n + 1
                )));
            }
            let entries = cfg.sections.get_mut(section).expect("section created with header");
            if entries.iter().any(|(e, _)| *e == canonical) {
                return Err(CliError::config(format!(
                    "line {}: key `{k}` repeated in [{section}]",
                    n + 1
                )));
            }
            entries.push((canonical, v.to_string()));
        }
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> &[(String, String)] {
        self.sections.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section)
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require_raw(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.raw(section, key)
            .ok_or_else(|| CliError::config(format!("missing key `{key}` in [{section}]")))
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(section, key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64, CliError> {
        parse_f64(key, self.require_raw(section, key)?)
    }

    /// Strictly positive finite value, `default` when absent.
    pub fn positive(&self, section: &str, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        let v = match self.f64(section, key)? {
            Some(v) => v,
            None => default.ok_or_else(|| CliError::config(format!("missing key `{key}` in [{section}]")))?,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::config(format!("key `{key}` must be finite and > 0, got {v}")));
        }
        Ok(v)
    }

    pub fn usize(&self, section: &str, key: &str, default: Option<usize>) -> Result<usize, CliError> {
        match self.raw(section, key) {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("key `{key}` must be a non-negative integer, got `{v}`"))),
            None => default.ok_or_else(|| CliError::config(format!("missing key `{key}` in [{section}]"))),
        }
    }

    /// The seed; required by every stochastic command.
    pub fn seed(&self) -> Result<u64, CliError> {
        let v = self.require_raw("numerics", "seed")?;
        v.parse::<u64>()
            .map_err(|_| CliError::config(format!("key `seed` must be a non-negative integer, got `{v}`")))
    }

    pub fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(section, key)
            .map(|v| v.split(',').map(|s| parse_f64(key, s.trim())).collect())
            .transpose()
    }

    pub fn require_list(&self, section: &str, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self
            .list(section, key)?
            .ok_or_else(|| CliError::config(format!("missing key `{key}` in [{section}]")))?;
        if v.is_empty() {
            return Err(CliError::config(format!("key `{key}` must not be empty")));
        }
        Ok(v)
    }
}

/// Normalized echo: one `[section]` line followed by its `key = value`
/// lines, sections in alphabetical order.
impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, entries) in &self.sections {
            writeln!(f, "[{name}]")?;
            for (k, v) in entries {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .map_err(|_| CliError::config(format!("key `{key}` must be a number, got `{v}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let c =
            Config::parse("# desk\n[model]\nFamily = cgmy\nc = 1 # comment\n[contract]\nspots = 80, 90.5\nT = 0.5\n")
                .unwrap();
        assert_eq!(c.raw("model", "family"), Some("cgmy"));
        assert_eq!(c.require_f64("contract", "T").unwrap(), 0.5);
        assert_eq!(c.list("contract", "spots").unwrap(), Some(vec![80.0, 90.5]));
        assert_eq!(c.f64("contract", "K").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        let e = Config::parse("[model]\nvolatility = 0.2\n").unwrap_err();
        assert!(e.to_string().contains("volatility"));
        assert!(Config::parse("[numerics]\nseed = 1\nseed = 2\n").is_err());
        assert!(Config::parse("[pricing]\n").is_err());
        assert!(Config::parse("seed = 1\n").is_err());
        assert!(Config::parse("[contract]\nk = 1\n").is_err());
    }

    #[test]
    fn validates_values() {
        let c = Config::parse("[numerics]\nquad_tol = -1\nseed = x\nn_paths = 2.5\n").unwrap();
        assert!(c
            .positive("numerics", "quad_tol", None)
            .unwrap_err()
            .to_string()
            .contains("quad_tol"));
        assert!(c.seed().unwrap_err().to_string().contains("seed"));
        assert!(c.usize("numerics", "n_paths", None).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = Config::parse("[model]\nfamily = cp\nlambda = 2\n[numerics]\nseed = 3\n").unwrap();
        let again = Config::parse(&c.to_string()).unwrap();
        assert_eq!(again.to_string(), c.to_string());
    }
}
