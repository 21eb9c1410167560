//! TOML scenario files and dotted `key=value` overrides.
//!
//! Overrides are applied to the serialised scenario, so every key a config
//! file can hold is reachable, and only keys that already exist are accepted.
//! Array elements are addressed as `steps[1]` or `steps.1`.

use toml::Value;

use crate::error::{Error, Result};
use crate::simulator::Scenario;

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parse a scenario file. Validation is left to [`Scenario::validate`].
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| cfg(e.to_string()))
}

pub fn to_toml(sc: &Scenario) -> Result<String> {
    toml::to_string(sc).map_err(|e| cfg(e.to_string()))
}

/// Split `key=value`, trimming whitespace around both parts.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| cfg(format!("override `{s}` is not key=value")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(cfg(format!("override `{s}` has an empty key")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Interpret the right-hand side as a TOML value; bare words become strings.
pub fn parse_value(text: &str) -> Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

#[derive(Debug, PartialEq)]
enum Seg {
    Key(String),
    Index(usize),
}

fn segments(path: &str) -> Result<Vec<Seg>> {
    let mut out = Vec::new();
    for part in path.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if name.is_empty() && rest.is_empty() {
            return Err(cfg(format!("empty segment in `{path}`")));
        }
        if !name.is_empty() {
            match name.parse::<usize>() {
                Ok(i) if out.last().is_some() => out.push(Seg::Index(i)),
                _ => out.push(Seg::Key(name.to_string())),
            }
        }
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| cfg(format!("unclosed `[` in `{path}`")))?;
            let idx = rest[1..close].parse::<usize>().map_err(|_| cfg(format!("bad index in `{path}`")))?;
            out.push(Seg::Index(idx));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(cfg(format!("unexpected `{rest}` in `{path}`")));
            }
        }
    }
    Ok(out)
}

/// Replace an existing entry of `root` at `path`.
pub fn set_path(root: &mut Value, path: &str, new: Value) -> Result<()> {
    let segs = segments(path)?;
    let mut cur = root;
    for seg in &segs {
        cur = match (seg, cur) {
            (Seg::Key(k), Value::Table(t)) => {
                t.get_mut(k).ok_or_else(|| cfg(format!("unknown key `{k}` in `{path}`")))?
            }
            (Seg::Index(i), Value::Array(a)) => {
                let n = a.len();
                a.get_mut(*i).ok_or_else(|| cfg(format!("index {i} out of range ({n} entries) in `{path}`")))?
            }
            (seg, _) => return Err(cfg(format!("`{path}`: cannot descend into {seg:?}"))),
        };
    }
    *cur = match (&*cur, new) {
        (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
        (_, v) => v,
    };
    Ok(())
}

pub fn apply_overrides(sc: &Scenario, overrides: &[(String, String)]) -> Result<Scenario> {
    if overrides.is_empty() {
        return Ok(sc.clone());
    }
    let mut v = Value::try_from(sc).map_err(|e| cfg(e.to_string()))?;
    for (k, text) in overrides {
        set_path(&mut v, k, parse_value(text))?;
    }
    v.try_into().map_err(|e: toml::de::Error| cfg(format!("after overrides: {e}")))
}

/// Set one numeric key, as used by sweeps.
pub fn with_value(sc: &Scenario, key: &str, value: f64) -> Result<Scenario> {
    let mut v = Value::try_from(sc).map_err(|e| cfg(e.to_string()))?;
    set_path(&mut v, key, Value::Float(value))?;
    v.try_into().map_err(|e: toml::de::Error| cfg(format!("setting `{key}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerConfig;
    use crate::presets::preset;

    #[test]
    fn round_trips_presets() {
        for name in ["e1", "e2a", "e2b", "e3"] {
            let sc = preset(name).unwrap();
            let text = to_toml(&sc).unwrap();
            assert_eq!(parse_scenario(&text).unwrap(), sc, "{name}");
        }
    }

    #[test]
    fn comments_and_defaults() {
        let text = r#"
            # minimal file
            horizon = 0.5   # seconds
            [controller]
            kind = "pi"
            kp = 0.01
            ki = 0.25
        "#;
        let sc = parse_scenario(text).unwrap();
        assert_eq!(sc.step_size, 1e-5);
        assert_eq!(sc.controller, ControllerConfig::pi(0.01, 0.25));
        sc.validate().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse_scenario("horizon = 1\nbogus = 2\n[controller]\nkind = \"pi\"\nkp = 1\nki = 1\n").is_err());
    }

    #[test]
    fn overrides_existing_keys() {
        let sc = preset("e1").unwrap();
        let o = vec![
            parse_override("controller.omega_o = 2500").unwrap(),
            parse_override("reference.steps[1].level=250").unwrap(),
            parse_override("reference.steps.2.time=2.5").unwrap(),
            parse_override("controller.observer=gpio").unwrap(),
            parse_override("plant.inertia=2e-3").unwrap(),
        ];
        let out = apply_overrides(&sc, &o).unwrap();
        match out.controller {
            ControllerConfig::Adrc { omega_o, observer, .. } => {
                assert_eq!(omega_o, 2500.0);
                assert_eq!(observer, crate::observer::ObserverKind::Gpio);
            }
            _ => panic!(),
        }
        assert_eq!(out.reference.steps[1].level, 250.0);
        assert_eq!(out.reference.steps[2].time, 2.5);
        assert_eq!(out.plant.inertia, 2e-3);
    }

    #[test]
    fn rejects_missing_keys_and_bad_types() {
        let sc = preset("e1").unwrap();
        for bad in ["controller.nope=1", "reference.steps[9].level=1", "horizon.x=1", "plant.inertia=\"x\"", "a[=1"] {
            let o = parse_override(bad).unwrap();
            assert!(apply_overrides(&sc, &[o]).is_err(), "{bad}");
        }
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("=3").is_err());
    }

    #[test]
    fn segment_parsing() {
        assert_eq!(
            segments("a.b[2][0].c").unwrap(),
            vec![Seg::Key("a".into()), Seg::Key("b".into()), Seg::Index(2), Seg::Index(0), Seg::Key("c".into())]
        );
        assert!(segments("a..b").is_err());
        assert!(segments("a[x]").is_err());
    }
}
