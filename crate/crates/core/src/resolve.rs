//! Per-form resolution: combine parsing, data flow, the split rule, and
//! database lookup into the numbers the analyses consume.

use std::collections::BTreeSet;

use crate::cycles::Cy;
use crate::model::{combine_split, signature_of, signature_string, MachineModel};
use crate::parse::{InstructionForm, Isa};
use crate::semantics::{data_flow, split_memory_form, DataFlow, SplitResult};

/// Everything the throughput and dependency analyses need for one line.
#[derive(Debug, Clone)]
pub struct ResolvedForm {
    pub line_number: u32,
    pub flow: DataFlow,
    /// Expanded per-port pressure, aligned with the model's port list.
    pub pressure: Vec<Cy>,
    /// Form-level latency: load + compute for split memory forms.
    pub latency: Cy,
    /// Latency feeding consumers of the main destination. For split forms
    /// this is the compute part only; the load part sits on the load vertex.
    pub compute_latency: Cy,
    /// Present when the form splits into load + compute parts.
    pub load_latency: Option<Cy>,
    /// Latency of the address-register writeback, when any.
    pub writeback_latency: Option<Cy>,
    /// True when the form split into load + compute parts.
    pub is_split: bool,
    /// Canonical registers used for address generation. For split forms,
    /// producers of these feed the load vertex rather than the compute part.
    pub addr_sources: BTreeSet<String>,
    /// False when the database had no entry and the form scored zero.
    pub known: bool,
    pub warnings: Vec<String>,
}

impl ResolvedForm {
    fn zero(line_number: u32, flow: DataFlow, ports: usize) -> ResolvedForm {
        let addr_sources = address_registers(&flow);
        ResolvedForm {
            line_number,
            flow,
            pressure: vec![Cy::ZERO; ports],
            latency: Cy::ZERO,
            compute_latency: Cy::ZERO,
            load_latency: None,
            writeback_latency: None,
            is_split: false,
            addr_sources,
            known: false,
            warnings: Vec::new(),
        }
    }
}

fn address_registers(flow: &DataFlow) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for mem in flow.mem_loads.iter().chain(&flow.mem_stores) {
        for reg in [&mem.base, &mem.index].into_iter().flatten() {
            if !reg.zero {
                out.insert(reg.canonical.clone());
            }
        }
    }
    out
}

/// Resolve one instruction form against the model.
///
/// Non-instruction lines resolve to all-zero pressure with no warnings.
/// Unknown instructions score zero pressure and zero latency, with a
/// warning; the report lists them so gaps are visible rather than silent.
pub fn resolve_form(form: &InstructionForm, model: &MachineModel, isa: Isa) -> ResolvedForm {
    let ports = model.ports.len();
    if !form.is_instruction() {
        return ResolvedForm::zero(form.line_number, DataFlow::default(), ports);
    }

    let flow = data_flow(form, isa);
    let mut warnings = Vec::new();
    if let Some(w) = &flow.warning {
        warnings.push(w.clone());
    }
    if let Some(w) = &form.unrecognized {
        warnings.push(format!("unparsed operands ({w})"));
    }

    match split_memory_form(form, isa) {
        SplitResult::Split(split) => {
            let load = model.load_part_entry();
            let explicit = model.lookup(form);
            let compute_entry = model.lookup(&split.compute);

            if !flow.mem_stores.is_empty() {
                warnings.push(format!(
                    "line {}: memory-destination form `{}` split into load and compute parts; the store result carries no dependency edge",
                    form.line_number, form.mnemonic
                ));
            }

            let resolved = match (explicit, compute_entry) {
                // An explicitly measured memory form wins; its latency is
                // split as (default load) + (remainder) for the graph.
                (Some(entry), _) => {
                    let compute_latency = if entry.latency > load.latency {
                        entry.latency - load.latency
                    } else {
                        Cy::ZERO
                    };
                    Some((
                        model.entry_pressure(entry),
                        entry.latency,
                        compute_latency,
                        entry.writeback_latency,
                    ))
                }
                // Otherwise synthesize from the register form plus the
                // default load part.
                (None, Some(compute)) => {
                    let combined = combine_split(&load, compute);
                    Some((
                        model.entry_pressure(&combined),
                        combined.latency,
                        compute.latency,
                        compute.writeback_latency,
                    ))
                }
                (None, None) => None,
            };

            match resolved {
                Some((pressure, latency, compute_latency, writeback)) => ResolvedForm {
                    line_number: form.line_number,
                    addr_sources: address_registers(&flow),
                    flow,
                    pressure,
                    latency,
                    compute_latency,
                    load_latency: Some(load.latency),
                    writeback_latency: writeback,
                    is_split: true,
                    known: true,
                    warnings,
                },
                None => {
                    warnings.push(unknown_warning(form));
                    let mut r = ResolvedForm::zero(form.line_number, flow, ports);
                    r.warnings = warnings;
                    r
                }
            }
        }
        SplitResult::Unchanged => match model.lookup(form) {
            Some(entry) => ResolvedForm {
                line_number: form.line_number,
                addr_sources: address_registers(&flow),
                flow,
                pressure: model.entry_pressure(entry),
                latency: entry.latency,
                compute_latency: entry.latency,
                load_latency: None,
                writeback_latency: entry.writeback_latency,
                is_split: false,
                known: true,
                warnings,
            },
            None => {
                warnings.push(unknown_warning(form));
                let mut r = ResolvedForm::zero(form.line_number, flow, ports);
                r.warnings = warnings;
                r
            }
        },
    }
}

fn unknown_warning(form: &InstructionForm) -> String {
    format!(
        "line {}: no database entry for `{}-{}`; scored as zero pressure and zero latency",
        form.line_number,
        form.mnemonic,
        signature_string(&signature_of(form))
    )
}

/// The writeback latency to put on writeback edges: the DB value when
/// present, else the form's full latency.
pub fn effective_writeback(resolved: &ResolvedForm) -> Cy {
    resolved.writeback_latency.unwrap_or(resolved.latency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_model_str;
    use crate::parse::parse_file;

    #[test]
    fn split_memory_form_combines_load_and_compute() {
        let clx = load_model_str(include_str!("../models/clx.toml"), "clx").unwrap();
        let forms = parse_file("addpd (%rax), %xmm1", Isa::X86);
        let r = resolve_form(&forms[0], &clx, Isa::X86);
        assert!(r.known);
        // load lat 4 + addpd lat 4
        assert_eq!(r.latency, Cy::int(8));
        assert_eq!(r.compute_latency, Cy::int(4));
        assert_eq!(r.load_latency, Some(Cy::int(4)));
        // pressure is the union: P0/P1 halves plus the load's AGU+data halves
        let total: Cy = r.pressure.iter().copied().sum();
        assert_eq!(total, Cy::int(3));
    }

    #[test]
    fn unknown_form_scores_zero_with_warning() {
        let tx2 = load_model_str(include_str!("../models/tx2.toml"), "tx2").unwrap();
        let forms = parse_file("fictitious_op x0, x1", Isa::Aarch64);
        let r = resolve_form(&forms[0], &tx2, Isa::Aarch64);
        assert!(!r.known);
        assert!(r.pressure.iter().all(|c| c.is_zero()));
        assert!(r.warnings.iter().any(|w| w.contains("no database entry")));
    }
}
