//! Flat key-value configuration with `[section]` headers.
//!
//! Experiments carry ~15 parameters, so they are resolved through a single
//! string map with the precedence: built-in defaults < config file <
//! `--model` preset < `--set section.key=value` overrides < dedicated
//! flags. The manifest records the final map.

use std::collections::BTreeMap;

use lamperti_core::lamperti::Scheme;
use lamperti_core::mc::TrimRule;
use lamperti_core::{Error, Result};

pub type ParamMap = BTreeMap<String, String>;

/// Parse `key = value` lines grouped under `[section]` headers; `#` starts
/// a comment.
pub fn parse_config(text: &str) -> Result<ParamMap> {
    let mut map = ParamMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| {
                Error::invalid(
                    "config",
                    format!("line {}: malformed section header", lineno + 1),
                )
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid(
                "config",
                format!("line {}: expected key = value", lineno + 1),
            )
        })?;
        let full = if section.is_empty() {
            key.trim().to_string()
        } else {
            format!("{section}.{}", key.trim())
        };
        map.insert(full, value.trim().to_string());
    }
    Ok(map)
}

/// Apply one `section.key=value` override.
pub fn apply_override(map: &mut ParamMap, pair: &str) -> Result<()> {
    let (key, value) = pair
        .split_once('=')
        .ok_or_else(|| Error::invalid("set", format!("override `{pair}` is not key=value")))?;
    map.insert(key.trim().to_string(), value.trim().to_string());
    Ok(())
}

/// Built-in defaults: the Brownian-conditioned reference setup.
pub fn defaults() -> ParamMap {
    let mut map = ParamMap::new();
    for (k, v) in [
        ("model.kind", "brownian_drift"),
        ("model.mu", "0.5"),
        ("model.sigma", "1"),
        ("experiment.alpha", "2"),
        ("experiment.x", "1"),
        ("experiment.times", "1"),
        ("experiment.n", "100"),
        ("experiment.n_list", "10,100"),
        ("experiment.fine_n", "100000"),
        ("experiment.replications", "10000"),
        ("experiment.scheme", "left_riemann"),
        ("experiment.horizon_cap", "65536"),
        ("experiment.r", "1"),
        ("experiment.s_grid", "1"),
        ("output.bins", "60"),
        ("output.trim", "paper_98"),
    ] {
        map.insert(k.to_string(), v.to_string());
    }
    map
}

/// Expand a `--model` preset or raw kind into the map.
pub fn apply_model_preset(map: &mut ParamMap, name: &str) -> Result<()> {
    // a preset replaces any previously configured model wholesale
    map.retain(|k, _| !k.starts_with("model."));
    match name {
        "zero" => {
            map.insert("model.kind".into(), "zero".into());
        }
        "bessel3" => {
            map.insert("model.kind".into(), "brownian_drift".into());
            map.insert("model.mu".into(), "0.5".into());
            map.insert("model.sigma".into(), "1".into());
            map.insert("experiment.alpha".into(), "2".into());
        }
        "brownian_drift" | "stable" | "compound_poisson_brownian" => {
            map.insert("model.kind".into(), name.into());
        }
        other => {
            return Err(Error::invalid(
                "model",
                format!("unknown model `{other}` (expected zero, bessel3, brownian_drift, stable, compound_poisson_brownian)"),
            ))
        }
    }
    Ok(())
}

const KNOWN_EXPERIMENT_KEYS: &[&str] = &[
    "alpha",
    "x",
    "times",
    "n",
    "n_list",
    "fine_n",
    "replications",
    "scheme",
    "horizon_cap",
    "r",
    "s_grid",
];
const KNOWN_OUTPUT_KEYS: &[&str] = &["bins", "trim"];

/// Reject unknown `experiment.*` / `output.*` keys (typo guard); `model.*`
/// keys are validated by the model builder itself.
pub fn check_known_keys(map: &ParamMap) -> Result<()> {
    for key in map.keys() {
        if let Some(rest) = key.strip_prefix("experiment.") {
            if !KNOWN_EXPERIMENT_KEYS.contains(&rest) {
                return Err(Error::invalid("config", format!("unknown key `{key}`")));
            }
        } else if let Some(rest) = key.strip_prefix("output.") {
            if !KNOWN_OUTPUT_KEYS.contains(&rest) {
                return Err(Error::invalid("config", format!("unknown key `{key}`")));
            }
        } else if !key.starts_with("model.") {
            return Err(Error::invalid("config", format!("unknown key `{key}`")));
        }
    }
    Ok(())
}

pub fn model_params(map: &ParamMap) -> ParamMap {
    map.iter()
        .filter_map(|(k, v)| k.strip_prefix("model.").map(|r| (r.to_string(), v.clone())))
        .collect()
}

pub fn get_f64(map: &ParamMap, key: &str) -> Result<f64> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::invalid("config", format!("missing `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::invalid("config", format!("`{key}` is not a number: {raw}")))
}

pub fn get_u32(map: &ParamMap, key: &str) -> Result<u32> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::invalid("config", format!("missing `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::invalid("config", format!("`{key}` is not an integer: {raw}")))
}

pub fn get_usize(map: &ParamMap, key: &str) -> Result<usize> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::invalid("config", format!("missing `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::invalid("config", format!("`{key}` is not an integer: {raw}")))
}

pub fn get_f64_list(map: &ParamMap, key: &str) -> Result<Vec<f64>> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::invalid("config", format!("missing `{key}`")))?;
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid("config", format!("`{key}` has a bad entry: {s}")))
        })
        .collect()
}

pub fn get_u32_list(map: &ParamMap, key: &str) -> Result<Vec<u32>> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::invalid("config", format!("missing `{key}`")))?;
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid("config", format!("`{key}` has a bad entry: {s}")))
        })
        .collect()
}

pub fn get_scheme(map: &ParamMap, key: &str) -> Result<Scheme> {
    match map.get(key).map(String::as_str) {
        Some("left_riemann") | None => Ok(Scheme::LeftRiemann),
        Some("trapezoid") => Ok(Scheme::Trapezoid),
        Some(other) => Err(Error::invalid(
            "config",
            format!("`{key}` must be left_riemann or trapezoid, got {other}"),
        )),
    }
}

pub fn get_trim(map: &ParamMap, key: &str) -> Result<TrimRule> {
    match map.get(key).map(String::as_str) {
        Some("paper_98") | None => Ok(TrimRule::Paper98),
        Some("none") => Ok(TrimRule::None),
        Some(other) => Err(Error::invalid(
            "config",
            format!("`{key}` must be paper_98 or none, got {other}"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_overrides() {
        let text = "# comment\n[model]\nkind = stable\nstability = 1.5\n\n[experiment]\nalpha = 0.5 # inline\n";
        let mut map = parse_config(text).unwrap();
        assert_eq!(map.get("model.kind").unwrap(), "stable");
        assert_eq!(map.get("experiment.alpha").unwrap(), "0.5");
        apply_override(&mut map, "experiment.alpha=0.7").unwrap();
        assert_eq!(map.get("experiment.alpha").unwrap(), "0.7");
        assert!(apply_override(&mut map, "no-equals").is_err());
        assert!(parse_config("[broken\nk = v").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut map = defaults();
        check_known_keys(&map).unwrap();
        map.insert("experiment.typo".into(), "1".into());
        assert!(check_known_keys(&map).is_err());
    }

    #[test]
    fn preset_replaces_model_block() {
        let mut map = defaults();
        apply_model_preset(&mut map, "zero").unwrap();
        assert_eq!(map.get("model.kind").unwrap(), "zero");
        assert!(!map.contains_key("model.mu"));
        assert!(apply_model_preset(&mut map, "nope").is_err());
    }
}
