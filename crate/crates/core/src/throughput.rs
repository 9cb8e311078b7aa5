//! Port-pressure accumulation and the throughput lower bound.
//!
//! Under the even-distribution assumption each line's pressure is fixed, so
//! the kernel total is a plain element-wise sum and the bound is the busiest
//! port's cycles. Dependencies are ignored here by construction — that is
//! what makes it a lower bound.

use crate::cycles::Cy;
use crate::model::MachineModel;
use crate::parse::Kernel;
use crate::resolve::resolve_form;

/// Per-line and accumulated pressure for a kernel.
#[derive(Debug, Clone)]
pub struct KernelPressure {
    /// One entry per kernel form (instructions and non-instructions alike),
    /// aligned with the model's port list.
    pub per_line: Vec<(u32, Vec<Cy>)>,
    pub total: Vec<Cy>,
    pub warnings: Vec<String>,
}

/// Accumulate pressure over the kernel: each line contributes the expanded
/// pressure of its (possibly split-and-combined) database record.
pub fn kernel_pressure(kernel: &Kernel, model: &MachineModel) -> KernelPressure {
    let mut total = vec![Cy::ZERO; model.ports.len()];
    let mut per_line = Vec::with_capacity(kernel.forms.len());
    let mut warnings = Vec::new();
    for form in &kernel.forms {
        let resolved = resolve_form(form, model, kernel.isa);
        for (acc, cy) in total.iter_mut().zip(&resolved.pressure) {
            *acc += *cy;
        }
        warnings.extend(resolved.warnings);
        per_line.push((form.line_number, resolved.pressure));
    }
    KernelPressure {
        per_line,
        total,
        warnings,
    }
}

/// The throughput lower bound: the busiest port's total, per source
/// iteration. `unroll` is the number of high-level iterations one assembly
/// iteration covers.
pub fn throughput_bound(total: &[Cy], unroll: u32) -> Cy {
    let max = total.iter().copied().fold(Cy::ZERO, Cy::max);
    max / Cy::int(unroll.max(1) as i64)
}
