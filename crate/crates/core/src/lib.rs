//! Static in-core analysis of assembly loop kernels.
//!
//! Given compiler-generated x86 (AT&T) or AArch64 assembly and a machine
//! model describing a CPU's execution ports and instruction database, this
//! crate predicts the in-core execution time of the marked loop three ways:
//!
//! * a throughput lower bound from accumulated port pressure,
//! * a critical-path upper bound from the latency-weighted dependency DAG,
//! * a loop-carried-dependency expectation from cycles detected across two
//!   back-to-back copies of the loop body.
//!
//! All data is assumed to hit the first-level cache; memory hierarchy
//! effects are someone else's department.

pub mod bench;
pub mod cycles;
pub mod graph;
pub mod model;
pub mod parse;
pub mod report;
pub mod resolve;
pub mod semantics;
pub mod throughput;

pub use cycles::Cy;
pub use model::MachineModel;
pub use parse::{Isa, Kernel};
pub use report::{analyze, analyze_kernel, Analysis, AnalysisConfig, AnalysisReport, Region};

/// Machine models bundled with the tool, loadable by name.
pub const BUNDLED_MODELS: &[(&str, &str)] = &[
    ("tx2", include_str!("../models/tx2.toml")),
    ("clx", include_str!("../models/clx.toml")),
    ("zen", include_str!("../models/zen.toml")),
];

/// Load a bundled model by name, or a model file by path.
pub fn load_arch(spec: &str) -> Result<MachineModel, model::ModelError> {
    for (name, text) in BUNDLED_MODELS {
        if spec.eq_ignore_ascii_case(name) {
            return model::load_model_str(text, name);
        }
    }
    let path = std::path::Path::new(spec);
    if path.exists() {
        return model::load_model(path);
    }
    let names: Vec<&str> = BUNDLED_MODELS.iter().map(|(n, _)| *n).collect();
    Err(model::ModelError::Parse(format!(
        "unknown architecture `{spec}`; bundled models: {} (or pass a model file path)",
        names.join(", ")
    )))
}

pub mod cli;
