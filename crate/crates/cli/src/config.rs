//! Loading a run configuration from JSON and applying `--set` overrides.

use std::path::Path;

use digeco_core::{validate_config, RunConfig};
use serde_json::Value;

use crate::CliError;

/// Reads `path` (or starts from the defaults) and applies `overrides` in order.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let parsed: RunConfig = serde_json::from_value(file)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::to_value(parsed).expect("config serialises")
        }
        None => serde_json::to_value(RunConfig::default()).expect("config serialises"),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    check(&config)?;
    Ok(config)
}

pub fn check(config: &RunConfig) -> Result<(), CliError> {
    let v = validate_config(config);
    if v.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(v.join("; ")))
    }
}

/// Sets the dotted path `key` of `root` to `raw`. The value is read as JSON
/// when it parses, otherwise as a plain string. Only existing keys can be set.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = &mut *root;
    for part in key.split('.') {
        slot = match slot {
            Value::Object(map) => map.get_mut(part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| CliError::Config(format!("unknown config key '{key}'")))?;
    }
    *slot = new;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_override() {
        let c = load(None, &["users.n_users=40".into(), "network.eta=0.2".into()]).unwrap();
        assert_eq!(c.users.n_users, 40);
        assert_eq!(c.network.eta, 0.2);
    }

    #[test]
    fn whole_object_override() {
        let c = load(
            None,
            &[r#"users.length_dist={"kind":"power_law","gamma":2.0,"lo":1,"hi":17}"#.into()],
        )
        .unwrap();
        assert_eq!(c.users.length_dist.name(), "power_law");
    }

    #[test]
    fn unknown_key_is_named() {
        let e = load(None, &["users.nope=1".into()]).unwrap_err();
        assert!(e.to_string().contains("users.nope"), "{e}");
    }

    #[test]
    fn invalid_value_is_named() {
        let e = load(None, &["network.p0=2".into()]).unwrap_err();
        assert!(e.to_string().contains("network.p0"), "{e}");
    }

    #[test]
    fn malformed_assignment() {
        assert!(load(None, &["seed".into()]).is_err());
    }
}
