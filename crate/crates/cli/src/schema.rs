//! Shipped JSON Schemas for the experiment documents, checked against the config types.
//!
//! Regenerate with `NONRAD_BLESS_SCHEMAS=1 cargo test -p nonrad-cli schemas`.

use std::path::PathBuf;

use schemars::{schema_for, JsonSchema};
use serde_json::Value;

use crate::config::*;

fn schema<T: JsonSchema>() -> Value {
    serde_json::to_value(schema_for!(ExperimentConfig<T>)).expect("schema serializes")
}

fn all() -> Vec<(&'static str, Value)> {
    vec![
        ("basis", schema::<BasisParams>()),
        ("evolve", schema::<EvolveParams>()),
        ("energy", schema::<EnergyParams>()),
        ("radiation", schema::<RadiationParams>()),
        ("nlw", schema::<NlwParams>()),
        ("lemmas", schema::<LemmasParams>()),
        ("pipeline", schema::<PipelineParams>()),
    ]
}

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

#[test]
fn schemas_match_config_types() {
    let bless = std::env::var_os("NONRAD_BLESS_SCHEMAS").is_some();
    for (name, generated) in all() {
        let path = dir().join(format!("{name}.schema.json"));
        if bless {
            std::fs::create_dir_all(dir()).unwrap();
            let mut text = serde_json::to_string_pretty(&generated).unwrap();
            text.push('\n');
            std::fs::write(&path, text).unwrap();
            continue;
        }
        let shipped: Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
                .unwrap();
        assert_eq!(shipped, generated, "{} is stale", path.display());
    }
}

#[test]
fn schemas_close_every_object() {
    fn walk(v: &Value, at: &str) {
        match v {
            Value::Object(m) => {
                if m.get("type") == Some(&Value::from("object")) && m.contains_key("properties") {
                    assert_eq!(
                        m.get("additionalProperties"),
                        Some(&Value::Bool(false)),
                        "open object at {at}"
                    );
                }
                for (k, x) in m {
                    walk(x, &format!("{at}/{k}"));
                }
            }
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(x, &format!("{at}/{i}"))),
            _ => {}
        }
    }
    for (name, s) in all() {
        walk(&s, name);
    }
}
