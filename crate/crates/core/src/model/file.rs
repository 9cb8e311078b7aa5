//! Machine-model file I/O.
//!
//! Models are TOML with three parts: a header (`format-version`, `arch`,
//! `ports`, `[defaults]`) and one `[[instruction]]` table per database
//! record. Cycle values are exact rationals written as integers or strings
//! (`"1/3"`, `"0.5"`); floats are rejected because they do not round-trip.
//! The full grammar is documented in `docs/machine-model.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DbEntry, MachineModel, ModelError, PressureItem};
use crate::cycles::Cy;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    arch: String,
    ports: Vec<String>,
    defaults: FileDefaults,
    #[serde(default, rename = "instruction")]
    instructions: Vec<FileInstruction>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileDefaults {
    load_latency: Cy,
    load_throughput: Cy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load_ports: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load_pressure: Option<Vec<(Cy, Vec<String>)>>,
    #[serde(default)]
    store_pressure: Vec<(Cy, Vec<String>)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileInstruction {
    mnemonic: String,
    operands: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    latency: Option<Cy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    throughput: Option<Cy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ports: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pressure: Option<Vec<(Cy, Vec<String>)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    writeback_latency: Option<Cy>,
}

fn items_from_file(raw: &[(Cy, Vec<String>)]) -> Vec<PressureItem> {
    raw.iter()
        .map(|(cycles, ports)| PressureItem {
            cycles: *cycles,
            ports: ports.clone(),
        })
        .collect()
}

fn items_to_file(items: &[PressureItem]) -> Vec<(Cy, Vec<String>)> {
    items
        .iter()
        .map(|item| (item.cycles, item.ports.clone()))
        .collect()
}

/// Load and validate a model from TOML text. `origin` names the source in
/// diagnostics (a path or a bundled-model name).
pub fn load_model_str(text: &str, origin: &str) -> Result<MachineModel, ModelError> {
    let file: ModelFile = toml::from_str(text)
        .map_err(|e| ModelError::Parse(format!("{origin}: {e}")))?;

    let load_pressure = match (&file.defaults.load_pressure, &file.defaults.load_ports) {
        (Some(items), _) => items_from_file(items),
        (None, Some(ports)) => super::derive_pressure(file.defaults.load_throughput, ports)?,
        (None, None) => Vec::new(),
    };

    let mut entries = Vec::with_capacity(file.instructions.len());
    for inst in &file.instructions {
        let signature = inst
            .operands
            .iter()
            .map(|t| super::OperandPattern::parse(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ModelError::BadToken)?;
        let inverse_throughput = inst.throughput.unwrap_or(Cy::ZERO);
        // Normalize at load: derive pressure from candidate ports right away
        // so a stored model always carries explicit pressure.
        let pressure = match (&inst.pressure, &inst.ports) {
            (Some(items), _) => items_from_file(items),
            (None, Some(ports)) if !inverse_throughput.is_zero() => {
                super::derive_pressure(inverse_throughput, ports)?
            }
            _ => Vec::new(),
        };
        entries.push(DbEntry {
            mnemonic: inst.mnemonic.to_ascii_lowercase(),
            signature,
            latency: inst.latency.unwrap_or(Cy::ZERO),
            inverse_throughput,
            pressure,
            candidate_ports: inst.ports.clone(),
            writeback_latency: inst.writeback_latency,
        });
    }

    let model = MachineModel {
        format_version: file.format_version,
        arch_name: file.arch,
        ports: file.ports,
        default_load_latency: file.defaults.load_latency,
        default_load_throughput: file.defaults.load_throughput,
        default_load_pressure: load_pressure,
        default_store_pressure: items_from_file(&file.defaults.store_pressure),
        entries,
    };
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<MachineModel, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io(path.display().to_string(), e))?;
    load_model_str(&text, &path.display().to_string())
}

/// Serialize a model to normalized TOML. Loading the result yields an equal
/// model, and storing it again yields byte-identical text.
pub fn store_model_str(model: &MachineModel) -> String {
    let file = ModelFile {
        format_version: model.format_version,
        arch: model.arch_name.clone(),
        ports: model.ports.clone(),
        defaults: FileDefaults {
            load_latency: model.default_load_latency,
            load_throughput: model.default_load_throughput,
            load_ports: None,
            load_pressure: Some(items_to_file(&model.default_load_pressure)),
            store_pressure: items_to_file(&model.default_store_pressure),
        },
        instructions: model
            .entries
            .iter()
            .map(|e| FileInstruction {
                mnemonic: e.mnemonic.clone(),
                operands: e.signature.iter().map(|p| p.token()).collect(),
                latency: Some(e.latency),
                throughput: Some(e.inverse_throughput),
                ports: e.candidate_ports.clone(),
                pressure: Some(items_to_file(&e.pressure)),
                writeback_latency: e.writeback_latency,
            })
            .collect(),
    };
    toml::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn store_model(model: &MachineModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, store_model_str(model))
        .map_err(|e| ModelError::Io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
format-version = 1
arch = "mini"
ports = ["P0", "P1"]

[defaults]
load-latency = "4"
load-throughput = "1"
load-ports = ["P0", "P1"]
store-pressure = [["1", ["P1"]]]

[[instruction]]
mnemonic = "fadd"
operands = ["fpr64", "fpr64", "fpr64"]
latency = "6"
throughput = "1"
ports = ["P0", "P1"]
"#;

    #[test]
    fn load_store_load_round_trips() {
        let m1 = load_model_str(MINIMAL, "test").unwrap();
        let text1 = store_model_str(&m1);
        let m2 = load_model_str(&text1, "test").unwrap();
        assert_eq!(m1, m2);
        // normalized text is a fixed point
        assert_eq!(store_model_str(&m2), text1);
    }

    #[test]
    fn unknown_port_rejected() {
        let bad = MINIMAL.replace("ports = [\"P0\", \"P1\"]\n", "ports = [\"P0\", \"P9\"]\n");
        // replaces both the header and entry declaration; fix the header back
        let bad = bad.replacen("ports = [\"P0\", \"P9\"]", "ports = [\"P0\", \"P1\"]", 1);
        let err = load_model_str(&bad, "test").unwrap_err();
        assert!(matches!(err, ModelError::UnknownPort { .. }), "{err}");
    }

    #[test]
    fn duplicate_entry_rejected() {
        let dup = format!(
            "{MINIMAL}\n[[instruction]]\nmnemonic = \"fadd\"\noperands = [\"fpr64\", \"fpr64\", \"fpr64\"]\nlatency = \"6\"\nthroughput = \"1\"\nports = [\"P0\"]\n"
        );
        let err = load_model_str(&dup, "test").unwrap_err();
        assert!(matches!(err, ModelError::DuplicateEntry(_)), "{err}");
    }

    #[test]
    fn zero_pressure_item_rejected() {
        let bad = MINIMAL.replace("store-pressure = [[\"1\", [\"P1\"]]]", "store-pressure = [[\"0\", [\"P1\"]]]");
        assert!(load_model_str(&bad, "test").is_err());
    }

    #[test]
    fn float_cycle_values_rejected() {
        let bad = MINIMAL.replace("latency = \"6\"", "latency = 6.0");
        let err = load_model_str(&bad, "test").unwrap_err();
        assert!(err.to_string().contains("not exact"), "{err}");
    }

    #[test]
    fn empty_entry_list_round_trips() {
        let text = r#"
format-version = 1
arch = "empty"
ports = ["A"]

[defaults]
load-latency = "1"
load-throughput = "1"
"#;
        let m1 = load_model_str(text, "test").unwrap();
        assert!(m1.entries.is_empty());
        let m2 = load_model_str(&store_model_str(&m1), "test").unwrap();
        assert_eq!(m1, m2);
    }
}
