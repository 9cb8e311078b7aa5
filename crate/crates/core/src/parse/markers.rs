//! Kernel region extraction via byte markers.
//!
//! The marked region is delimited by a move of a magic immediate into a
//! fixed register followed by a `.byte` directive:
//!
//! x86:     `movl $111, %ebx` + `.byte 100,103,144`   (start)
//!          `movl $222, %ebx` + `.byte 100,103,144`   (end)
//! AArch64: `mov x1, 111`     + `.byte 213,3,32,31`   (start)
//!          `mov x1, 222`     + `.byte 213,3,32,31`   (end)

use std::fmt;

use super::{InstructionForm, Isa, Kernel, Operand};

const START_IMM: i64 = 111;
const END_IMM: i64 = 222;

fn marker_reg(isa: Isa) -> &'static str {
    match isa {
        Isa::X86 => "rbx",
        Isa::Aarch64 => "x1",
    }
}

fn marker_bytes(isa: Isa) -> &'static [i64] {
    match isa {
        Isa::X86 => &[100, 103, 144],
        Isa::Aarch64 => &[213, 3, 32, 31],
    }
}

/// Errors from [`find_markers`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkerError {
    StartNotFound,
    EndNotFound,
    EndBeforeStart,
    Duplicate(&'static str),
    EmptyRegion,
}

impl fmt::Display for MarkerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerError::StartNotFound => f.write_str("start marker not found"),
            MarkerError::EndNotFound => f.write_str("end marker not found"),
            MarkerError::EndBeforeStart => f.write_str("end marker appears before start marker"),
            MarkerError::Duplicate(which) => {
                write!(f, "more than one {which} marker found; exactly one marked region is supported")
            }
            MarkerError::EmptyRegion => f.write_str("marked region contains no instructions"),
        }
    }
}

impl std::error::Error for MarkerError {}

/// Extract the kernel strictly between the start and end markers.
pub fn find_markers(forms: &[InstructionForm], isa: Isa) -> Result<Kernel, MarkerError> {
    let starts = marker_positions(forms, isa, START_IMM);
    let ends = marker_positions(forms, isa, END_IMM);

    if starts.len() > 1 {
        return Err(MarkerError::Duplicate("start"));
    }
    if ends.len() > 1 {
        return Err(MarkerError::Duplicate("end"));
    }
    let &(start_head, start_tail) = starts.first().ok_or(MarkerError::StartNotFound)?;
    let &(end_head, _) = ends.first().ok_or(MarkerError::EndNotFound)?;
    if end_head <= start_tail {
        return Err(MarkerError::EndBeforeStart);
    }
    let _ = start_head;

    let body: Vec<InstructionForm> = forms[start_tail + 1..end_head].to_vec();
    if !body.iter().any(|f| f.is_instruction()) {
        return Err(MarkerError::EmptyRegion);
    }
    Ok(Kernel { forms: body, isa })
}

/// Positions of `(mov-head, byte-directive)` marker pairs for a magic value.
fn marker_positions(forms: &[InstructionForm], isa: Isa, imm: i64) -> Vec<(usize, usize)> {
    let mut found = Vec::new();
    for (i, form) in forms.iter().enumerate() {
        if !is_marker_mov(form, isa, imm) {
            continue;
        }
        // The `.byte` directive must be the next non-blank form.
        let tail = forms[i + 1..]
            .iter()
            .position(|f| f.kind() != super::LineKind::Blank)
            .map(|off| i + 1 + off);
        if let Some(j) = tail {
            if is_marker_bytes(&forms[j], isa) {
                found.push((i, j));
            }
        }
    }
    found
}

fn is_marker_mov(form: &InstructionForm, isa: Isa, imm: i64) -> bool {
    if !form.mnemonic.starts_with("mov") || form.operands.len() != 2 {
        return false;
    }
    let (reg_op, imm_op) = match isa {
        // AT&T order: source first.
        Isa::X86 => (&form.operands[1], &form.operands[0]),
        Isa::Aarch64 => (&form.operands[0], &form.operands[1]),
    };
    matches!(imm_op, Operand::Imm(v) if *v == imm)
        && matches!(reg_op, Operand::Reg(r) if r.canonical == marker_reg(isa))
}

fn is_marker_bytes(form: &InstructionForm, isa: Isa) -> bool {
    let Some(d) = &form.directive else {
        return false;
    };
    if d.name != "byte" {
        return false;
    }
    let parsed: Option<Vec<i64>> = d.args.iter().map(|a| a.trim().parse().ok()).collect();
    parsed.as_deref() == Some(marker_bytes(isa))
}
