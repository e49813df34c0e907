//! Configuration text: JSON objects or `key=value` lines.
//!
//! `key=value` files allow blank lines and `#` comments. Values that parse
//! as numbers or booleans become JSON numbers and booleans, everything else
//! a string. The resulting object is deserialized with the usual serde
//! rules, so unknown keys are rejected by types that deny them.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key '{key}': {msg}")]
    Key { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Parses `text` into a JSON object.
pub fn parse_config_text(text: &str) -> Result<Map<String, Value>, ConfigError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => Ok(m),
            Ok(_) => Err(ConfigError::Syntax { line: 1, msg: "expected a JSON object".into() }),
            Err(e) => Err(ConfigError::Syntax { line: e.line(), msg: e.to_string() }),
        };
    }
    let mut map = Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("expected key=value, got '{line}'") })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, msg: "empty key".into() });
        }
        if map.insert(k.to_string(), scalar(v)).is_some() {
            return Err(ConfigError::Syntax { line: i + 1, msg: format!("duplicate key '{k}'") });
        }
    }
    Ok(map)
}

fn scalar(v: &str) -> Value {
    if let Ok(i) = v.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(f) = v.parse::<f64>() {
        if f.is_finite() {
            return Value::from(f);
        }
    }
    match v {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(v.trim_matches('"').to_string()),
    }
}

/// Parses and deserializes a configuration of type `T`.
pub fn from_config_text<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    from_map(parse_config_text(text)?)
}

/// Like [`from_config_text`], but keys missing from `text` keep their
/// values from `base` instead of the type's defaults.
pub fn merge_config_text<T: Serialize + DeserializeOwned>(base: &T, text: &str) -> Result<T, ConfigError> {
    let mut overrides = parse_config_text(text)?;
    let Value::Object(mut full) = serde_json::to_value(base).map_err(|e| ConfigError::Invalid(e.to_string()))? else {
        return Err(ConfigError::Invalid("base configuration is not an object".into()));
    };
    full.append(&mut overrides);
    from_map(full)
}

fn from_map<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, ConfigError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| {
        let msg = e.to_string();
        let key = msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<config>".into());
        ConfigError::Key { key, msg }
    })
}

pub fn read_config_file(path: &std::path::Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })
}

pub fn from_config_file<T: DeserializeOwned>(path: &std::path::Path) -> Result<T, ConfigError> {
    from_config_text(&read_config_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq, Default)]
    #[serde(default, deny_unknown_fields)]
    struct Demo {
        gain_fraction: f64,
        name: String,
        epochs: usize,
        flag: bool,
    }

    #[test]
    fn key_value_and_json_agree() {
        let a: Demo = from_config_text("# c\ngain_fraction=0.2\nname = desk\n\nepochs=3\nflag=true\n").unwrap();
        let b: Demo = from_config_text(r#"{"gain_fraction":0.2,"name":"desk","epochs":3,"flag":true}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gain_fraction, 0.2);
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(from_config_text::<Demo>("").unwrap(), Demo::default());
    }

    #[test]
    fn unknown_key_named() {
        match from_config_text::<Demo>("bogus=1") {
            Err(ConfigError::Key { key, .. }) => assert_eq!(key, "bogus"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        assert_eq!(
            from_config_text::<Demo>("epochs=1\nnonsense\n").unwrap_err(),
            ConfigError::Syntax { line: 2, msg: "expected key=value, got 'nonsense'".into() }
        );
    }

    #[test]
    fn merge_keeps_base_values() {
        let base = Demo { gain_fraction: 0.3, name: "base".into(), epochs: 80, flag: true };
        let m: Demo = merge_config_text(&base, "epochs=5").unwrap();
        assert_eq!(m, Demo { epochs: 5, ..base });
        assert!(matches!(merge_config_text(&m, "nope=1"), Err(ConfigError::Key { .. })));
    }
}
