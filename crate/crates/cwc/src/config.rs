//! TOML configuration with `section.key=value` overrides.

use std::path::Path;

use cwc_core::pipeline::PipelineConfig;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Parse `text`, apply `overrides` and validate every section.
pub fn parse(text: &str, overrides: &[String]) -> Result<PipelineConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("invalid TOML: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: PipelineConfig = toml::Value::Table(table).try_into().map_err(|e| CliError::Config(format!("{e}")))?;
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

/// Read `path`, or start from the defaults when `None`.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse(&text, overrides)
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form section.key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in path {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Hex SHA-256 of the canonical JSON form of `config`.
pub fn config_hash(config: &PipelineConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse("", &[]).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse("[bath]\ntemprature = 2.0\n", &[]), Err(CliError::Config(_))));
        assert!(matches!(parse("[nonsense]\n", &[]), Err(CliError::Config(_))));
    }

    #[test]
    fn overrides_apply_and_nest() {
        let c = parse("[bath]\ngamma = 2.0\n", &["bath.gamma=3.5".into(), "unraveling.scheme=diffusive".into(), "absorption.slits.detectors=8".into()]).unwrap();
        assert_eq!(c.bath.gamma, 3.5);
        assert_eq!(c.unraveling.scheme, cwc_core::unraveling::Scheme::Diffusive);
        assert_eq!(c.absorption.slits.unwrap().detectors, 8);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        assert!(matches!(parse("", &["pointer.spring=-1".into()]), Err(CliError::Config(_))));
        assert!(matches!(parse("", &["nokey".into()]), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse("", &[]).unwrap();
        let b = parse("", &["bath.gamma=2".into()]).unwrap();
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
