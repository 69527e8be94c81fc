//! One-key parameter sweeps.

use crate::error::Diagnostic;
use crate::scenario::{LoadedScenario, Scenario};

/// The scenario once per sweep value, each labelled `key=value`. A scenario
/// without a sweep yields nothing.
pub fn variants(loaded: &LoadedScenario) -> Result<Vec<(String, LoadedScenario)>, Diagnostic> {
    let Some(spec) = &loaded.scenario.sweep else { return Ok(vec![]) };
    let mut base = loaded.scenario.clone();
    base.sweep = None;
    if let Some(r) = spec.runs {
        base.runs = r;
    }
    let tree = toml::Value::try_from(&base).map_err(|e| Diagnostic::new("sweep", e.to_string()))?;
    let keys: Vec<&str> = spec.path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Diagnostic::new("sweep.path", format!("`{}` is not a dotted key", spec.path)));
    }
    let mut out = Vec::with_capacity(spec.values.len());
    for (i, value) in spec.values.iter().enumerate() {
        let mut t = tree.clone();
        set(&mut t, &keys, value.clone())
            .map_err(|_| Diagnostic::new("sweep.path", format!("`{}` does not resolve against the scenario", spec.path)))?;
        let scenario: Scenario = t.try_into().map_err(|e: toml::de::Error| {
            if e.message().contains("unknown field") {
                Diagnostic::new("sweep.path", format!("`{}` does not resolve: {}", spec.path, e.message()))
            } else {
                Diagnostic::new(format!("sweep.values[{i}]"), e.message().to_string())
            }
        })?;
        let label = sanitize(&format!("{}={}", keys[keys.len() - 1], value));
        out.push((
            label.clone(),
            LoadedScenario {
                scenario,
                origin: format!("{} [{label}]", loaded.origin),
                text: format!("{}\n# sweep {label}\n", loaded.text),
                base_dir: loaded.base_dir.clone(),
            },
        ));
    }
    Ok(out)
}

/// Sets `keys` inside nested tables. Intermediate tables must exist; the last
/// key may be new so that unset optional fields can be swept.
fn set(tree: &mut toml::Value, keys: &[&str], value: toml::Value) -> Result<(), ()> {
    let mut node = tree;
    for k in &keys[..keys.len() - 1] {
        node = node.as_table_mut().and_then(|t| t.get_mut(*k)).ok_or(())?;
    }
    let table = node.as_table_mut().ok_or(())?;
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn load(text: &str) -> LoadedScenario {
        LoadedScenario::parse(text, "t", PathBuf::new()).unwrap()
    }

    #[test]
    fn sets_each_value() {
        let l = load("[sweep]\npath = \"thz.tx_power_dbm\"\nvalues = [0.0, 10.0]\nruns = 7\n");
        let v = variants(&l).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].0, "tx_power_dbm=0.0");
        assert_eq!(v[1].1.scenario.thz.tx_power_dbm, 10.0);
        assert_eq!(v[1].1.scenario.runs, 7);
        assert!(v[1].1.scenario.sweep.is_none());
    }

    #[test]
    fn unset_optional_key_resolves() {
        let l = load("[sweep]\npath = \"protocol.ack_delay_s\"\nvalues = [0.02]\n");
        let v = variants(&l).unwrap();
        assert_eq!(v[0].1.scenario.protocol.ack_delay_s, Some(0.02));
    }

    #[test]
    fn bad_path_is_reported() {
        let l = load("[sweep]\npath = \"thz.tx_power\"\nvalues = [1.0]\n");
        assert_eq!(variants(&l).unwrap_err().path, "sweep.path");
        let l = load("[sweep]\npath = \"nope.x\"\nvalues = [1.0]\n");
        assert_eq!(variants(&l).unwrap_err().path, "sweep.path");
    }

    #[test]
    fn bad_value_type_is_reported() {
        let l = load("[sweep]\npath = \"fleet.n_vehicles\"\nvalues = [\"many\"]\n");
        assert_eq!(variants(&l).unwrap_err().path, "sweep.values[0]");
    }
}
