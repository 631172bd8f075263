//! Shipped experiment presets, one JSON file per experiment family.

use serde_json::Value;

use crate::error::{LabError, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("state-transfer-ising", include_str!("../presets/state-transfer-ising.json")),
    ("ising-entanglement", include_str!("../presets/ising-entanglement.json")),
    ("xy-entanglement", include_str!("../presets/xy-entanglement.json")),
    ("xyz-entanglement", include_str!("../presets/xyz-entanglement.json")),
    ("jw-special", include_str!("../presets/jw-special.json")),
    ("tc-breakdown", include_str!("../presets/tc-breakdown.json")),
    ("static-field-drive", include_str!("../presets/static-field-drive.json")),
    ("spin1-protect", include_str!("../presets/spin1-protect.json")),
    ("protected-gate", include_str!("../presets/protected-gate.json")),
    ("ny-sweep", include_str!("../presets/ny-sweep.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| LabError::Config(format!("unknown preset {name:?}; see `spindd list-presets`")))
}

pub fn preset_value(name: &str) -> Result<Value> {
    let value: Value = serde_json::from_str(preset_source(name)?)
        .map_err(|e| LabError::Config(format!("preset {name}: {e}")))?;
    if value.get("preset").and_then(Value::as_str) != Some(name) {
        return Err(LabError::Config(format!("preset file {name} names a different preset")));
    }
    Ok(value)
}
