//! The shipped JSON schemas stay in sync with what the binary reads and writes.

use std::collections::BTreeSet;

use austere_core::artifact::SurfaceFile;
use austere_core::export::SliceSpec;
use austere_core::presets::Preset;
use austere_core::run::{RunConfig, Tolerances};
use austere_core::sampling::SamplingSpec;
use serde_json::Value;

fn schema(name: &str) -> Value {
    let path = format!("{}/schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn schemas_are_valid_json() {
    for name in ["common", "run-config", "surface", "slice", "report"] {
        assert_eq!(schema(&format!("{name}.schema.json"))["type"].is_string(), name != "common");
    }
}

#[test]
fn property_names_match_serialized_types() {
    let run = schema("run-config.schema.json");
    let mut cfg = RunConfig::new(SamplingSpec::new(1));
    cfg.surface = Some(austere_core::run::SurfaceSpec::Preset { name: Preset::N4Canonical });
    cfg.outputs.csv = Some("x.csv".into());
    cfg.outputs.report = Some("x.json".into());
    let cfg = serde_json::to_value(&cfg).unwrap();
    let props = &run["properties"];
    assert_eq!(keys(props), keys(&cfg));
    for section in ["sampling", "tolerances", "outputs"] {
        assert_eq!(keys(&props[section]["properties"]), keys(&cfg[section]), "{section}");
    }
    assert_eq!(
        keys(&props["tolerances"]["properties"]),
        keys(&serde_json::to_value(Tolerances::default()).unwrap())
    );
    let surface = serde_json::to_value(SurfaceFile::from_surface(&Preset::N4Canonical.build().unwrap())).unwrap();
    assert_eq!(keys(&schema("surface.schema.json")["properties"]), keys(&surface));
    let slice = serde_json::to_value(SliceSpec::default()).unwrap();
    assert_eq!(keys(&schema("slice.schema.json")["properties"]), keys(&slice));
}
