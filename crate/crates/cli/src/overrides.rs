//! Dotted-path overrides applied to the JSON form of a scenario.

use crate::CliError;
use serde_json::Value;

/// One `key=value` assignment. The value is read as JSON when it parses
/// (numbers, booleans, null, quoted strings, arrays), else as a bare string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl std::str::FromStr for Override {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |m: &str| CliError::Override(format!("`{s}`: {m}"));
        let (key, raw) = s.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(bad("empty key segment"));
        }
        let raw = raw.trim();
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Self {
            path: key.split('.').map(str::to_string).collect(),
            value,
        })
    }
}

impl Override {
    pub fn key(&self) -> String {
        self.path.join(".")
    }

    /// Replaces an existing value; keys that are not already present are
    /// rejected rather than created.
    pub fn apply(&self, root: &mut Value) -> Result<(), CliError> {
        let mut node = root;
        for (depth, seg) in self.path.iter().enumerate() {
            let here = || self.path[..=depth].join(".");
            node = match node {
                Value::Object(map) => map.get_mut(seg).ok_or_else(|| {
                    CliError::Override(format!("no key `{}` in scenario", here()))
                })?,
                Value::Array(items) => {
                    let len = items.len();
                    let i: usize = seg.parse().map_err(|_| {
                        CliError::Override(format!("`{}`: `{seg}` is not a list index", here()))
                    })?;
                    items.get_mut(i).ok_or_else(|| {
                        CliError::Override(format!(
                            "`{}`: index {i} out of range (length {len})",
                            here()
                        ))
                    })?
                }
                _ => {
                    return Err(CliError::Override(format!(
                        "`{}`: `{}` is a scalar",
                        here(),
                        self.path[..depth].join(".")
                    )))
                }
            };
        }
        *node = self.value.clone();
        Ok(())
    }
}

/// `key=v1,v2,...` for sweeps: one override per listed value.
pub fn parse_vary(s: &str) -> Result<Vec<Override>, CliError> {
    let (key, values) = s
        .split_once('=')
        .ok_or_else(|| CliError::Override(format!("`{s}`: expected key=v1,v2,...")))?;
    let out: Result<Vec<Override>, CliError> = values
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| format!("{key}={v}").parse())
        .collect();
    let out = out?;
    if out.is_empty() {
        return Err(CliError::Override(format!("`{s}`: no values")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn values_parse_as_json_or_strings() {
        let o: Override = "placements.2.h=2".parse().unwrap();
        assert_eq!(o.path, ["placements", "2", "h"]);
        assert_eq!(o.value, json!(2));
        assert_eq!("name=abc".parse::<Override>().unwrap().value, json!("abc"));
        assert_eq!("a.b=null".parse::<Override>().unwrap().value, Value::Null);
        assert!("a..b=1".parse::<Override>().is_err());
        assert!("novalue".parse::<Override>().is_err());
    }

    #[test]
    fn only_existing_keys_are_replaced() {
        let mut v = json!({"a": [{"h": 4.0}, {"h": 5.0}], "b": 1});
        "a.1.h=6"
            .parse::<Override>()
            .unwrap()
            .apply(&mut v)
            .unwrap();
        assert_eq!(v, json!({"a": [{"h": 4.0}, {"h": 6}], "b": 1}));
        for bad in ["a.2.h=1", "a.x.h=1", "a.0.inirtia=1", "b.c=1", "c=1"] {
            let before = v.clone();
            assert!(
                bad.parse::<Override>().unwrap().apply(&mut v).is_err(),
                "{bad}"
            );
            assert_eq!(v, before);
        }
    }

    #[test]
    fn vary_expands_values() {
        let o = parse_vary("config.dt=0.001,0.0005").unwrap();
        assert_eq!(o.len(), 2);
        assert_eq!(o[1].value, json!(0.0005));
        assert!(parse_vary("config.dt=").is_err());
    }
}
