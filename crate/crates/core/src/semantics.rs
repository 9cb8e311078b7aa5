//! Data-flow roles per ISA: which operands are read, which are written,
//! which idioms break dependency chains, and how memory-including forms
//! split into a load part and a compute part.

use std::collections::BTreeSet;

use crate::parse::{InstructionForm, Isa, MemOperand, Operand, RegClass, Register};

/// A register written by an instruction form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destination {
    pub reg: String,
    /// True for address-register updates (AArch64 post/pre-increment).
    pub writeback: bool,
}

/// Sources and destinations of one instruction form, on canonical ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataFlow {
    pub sources: BTreeSet<String>,
    pub destinations: Vec<Destination>,
    pub mem_loads: Vec<MemOperand>,
    pub mem_stores: Vec<MemOperand>,
    /// The destination is written without a true read (zero idiom or
    /// immediate move); prior writers of it must not be depended on.
    pub breaks_dependency: bool,
    pub warning: Option<String>,
}

/// Coarse role class of a mnemonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Load,
    Store,
    Compare,
    Branch,
    Compute,
    Push,
    Pop,
    Unknown,
}

const A64_LOADS: &[&str] = &[
    "ldr", "ldur", "ldrb", "ldrh", "ldrsb", "ldrsh", "ldrsw", "ldp", "ldnp",
];
const A64_STORES: &[&str] = &["str", "stur", "strb", "strh", "stp", "stnp"];
const A64_COMPARES: &[&str] = &["cmp", "cmn", "tst", "fcmp", "fcmpe", "ccmp", "ccmn"];
const A64_BRANCHES: &[&str] = &[
    "b", "br", "bl", "blr", "ret", "cbz", "cbnz", "tbz", "tbnz", "bne", "beq", "blt", "ble",
    "bgt", "bge", "bhi", "bls", "bcc", "bcs", "bmi", "bpl", "bvs", "bvc",
];
const A64_COMPUTE: &[&str] = &[
    "fadd", "fsub", "fmul", "fdiv", "fmadd", "fmsub", "fnmadd", "fnmsub", "fmov", "fabs",
    "fneg", "fsqrt", "fcvt", "fcvtzs", "fcvtzu", "scvtf", "ucvtf", "fcsel", "fmin", "fmax",
    "add", "adds", "sub", "subs", "mul", "madd", "msub", "mneg", "smull", "umull", "sdiv",
    "udiv", "and", "ands", "orr", "orn", "eor", "eon", "bic", "lsl", "lsr", "asr", "ror",
    "mov", "movz", "movk", "movn", "mvn", "neg", "adrp", "adr", "sxtw", "sxth", "sxtb",
    "uxtw", "uxth", "uxtb", "csel", "csinc", "csinv", "csneg", "cset", "csetm", "cinc",
    "ubfiz", "ubfx", "sbfiz", "sbfx", "bfi", "bfxil", "rev", "rev16", "rev32", "clz", "rbit",
    "dup", "ins", "nop",
];

const X86_COMPARE_PREFIXES: &[&str] = &["cmp", "test", "ucomis", "comis", "vucomis", "vcomis"];
const X86_BRANCHES: &[&str] = &[
    "jmp", "jmpq", "ja", "jae", "jb", "jbe", "jc", "je", "jg", "jge", "jl", "jle", "jna",
    "jnae", "jnb", "jnbe", "jnc", "jne", "jng", "jnge", "jnl", "jnle", "jno", "jnp", "jns",
    "jnz", "jo", "jp", "js", "jz", "call", "callq", "ret", "retq", "loop", "loope", "loopne",
];
// Move-family prefixes overwrite their destination without reading it.
const X86_PURE_MOVE_PREFIXES: &[&str] = &[
    "mov", "vmov", "lea", "cvt", "vcvt", "sqrt", "vsqrt", "rcp", "rsqrt", "vbroadcast",
    "set", "pmov", "vpmov", "lddqu", "vlddqu",
];
const X86_COMPUTE_PREFIXES: &[&str] = &[
    "add", "vadd", "sub", "vsub", "adc", "sbb", "and", "vand", "or", "vor", "xor", "vxor",
    "not", "neg", "inc", "dec", "imul", "mul", "vmul", "div", "vdiv", "idiv", "shl", "sal",
    "shr", "sar", "rol", "ror", "min", "vmin", "max", "vmax", "padd", "vpadd", "psub",
    "vpsub", "pmul", "vpmul", "pand", "vpand", "pxor", "vpxor", "por", "vpor", "unpck",
    "vunpck", "punpck", "vpunpck", "shuf", "vshuf", "pshuf", "vpshuf", "blend", "vblend",
    "vfmadd", "vfmsub", "vfnmadd", "vfnmsub", "hadd", "vhadd", "hsub", "vhsub", "andn",
    "xchg", "cqto", "cltq", "cdq",
];

/// x86 zero idioms that break the dependency on their destination when
/// source and destination name the same register.
const X86_ZERO_IDIOM_PREFIXES: &[&str] = &["xor", "pxor", "vpxor", "vxorps", "vxorpd"];

fn a64_kind(mnemonic: &str) -> OpKind {
    if A64_LOADS.contains(&mnemonic) {
        OpKind::Load
    } else if A64_STORES.contains(&mnemonic) {
        OpKind::Store
    } else if A64_COMPARES.contains(&mnemonic) {
        OpKind::Compare
    } else if A64_BRANCHES.contains(&mnemonic) || mnemonic.starts_with("b.") {
        OpKind::Branch
    } else if A64_COMPUTE.contains(&mnemonic) {
        OpKind::Compute
    } else {
        OpKind::Unknown
    }
}

fn prefix_match(mnemonic: &str, prefixes: &[&str]) -> bool {
    prefixes.iter().any(|p| mnemonic.starts_with(p))
}

fn x86_is_pure_move(mnemonic: &str) -> bool {
    prefix_match(mnemonic, X86_PURE_MOVE_PREFIXES)
}

fn x86_kind(form: &InstructionForm) -> OpKind {
    let m = form.mnemonic.as_str();
    if X86_BRANCHES.contains(&m) {
        return OpKind::Branch;
    }
    if prefix_match(m, X86_COMPARE_PREFIXES) {
        return OpKind::Compare;
    }
    if m.starts_with("push") {
        return OpKind::Push;
    }
    if m.starts_with("pop") {
        return OpKind::Pop;
    }
    if x86_is_pure_move(m) && !m.starts_with("lea") {
        if form.operands.last().is_some_and(|o| o.as_mem().is_some()) {
            return OpKind::Store;
        }
        if form.operands.iter().any(|o| o.as_mem().is_some()) {
            return OpKind::Load;
        }
        return OpKind::Compute;
    }
    if x86_is_pure_move(m) || prefix_match(m, X86_COMPUTE_PREFIXES) {
        return OpKind::Compute;
    }
    OpKind::Unknown
}

pub fn classify(form: &InstructionForm, isa: Isa) -> OpKind {
    match isa {
        Isa::X86 => x86_kind(form),
        Isa::Aarch64 => a64_kind(&form.mnemonic),
    }
}

/// Does this x86 form read its destination operand (read-modify-write)?
/// Classic two-operand arithmetic and FMA accumulate into the destination;
/// moves and non-destructive three-operand VEX forms do not.
fn x86_reads_destination(form: &InstructionForm) -> bool {
    let m = form.mnemonic.as_str();
    if prefix_match(m, &["vfmadd", "vfmsub", "vfnmadd", "vfnmsub"]) {
        return true;
    }
    !x86_is_pure_move(m) && form.operands.len() <= 2
}

fn add_source(df: &mut DataFlow, reg: &Register) {
    if !reg.zero {
        df.sources.insert(reg.canonical.clone());
    }
}

fn add_dest(df: &mut DataFlow, reg: &Register, writeback: bool) {
    if reg.zero {
        return;
    }
    if !df
        .destinations
        .iter()
        .any(|d| d.reg == reg.canonical && d.writeback == writeback)
    {
        df.destinations.push(Destination {
            reg: reg.canonical.clone(),
            writeback,
        });
    }
}

/// Address registers are read by every memory access, loads and stores alike.
fn add_mem_sources(df: &mut DataFlow, mem: &MemOperand) {
    if let Some(base) = &mem.base {
        add_source(df, base);
    }
    if let Some(index) = &mem.index {
        add_source(df, index);
    }
    if mem.writeback.is_some() {
        if let Some(base) = &mem.base {
            add_dest(df, base, true);
        }
    }
}

/// Compute sources and destinations of a parsed form.
///
/// AArch64 convention: the first operand is the destination (stores and
/// compares excepted). x86 AT&T convention: the last operand is the
/// destination. Flag effects are not modeled.
pub fn data_flow(form: &InstructionForm, isa: Isa) -> DataFlow {
    let mut df = DataFlow::default();
    if !form.is_instruction() {
        return df;
    }
    let kind = classify(form, isa);
    if kind == OpKind::Unknown {
        df.warning = Some(format!(
            "line {}: unrecognized mnemonic `{}`; treating register operands as sources with the positional destination",
            form.line_number, form.mnemonic
        ));
    }

    match isa {
        Isa::Aarch64 => a64_data_flow(form, kind, &mut df),
        Isa::X86 => x86_data_flow(form, kind, &mut df),
    }

    apply_break_rules(form, isa, &mut df);
    df
}

fn a64_data_flow(form: &InstructionForm, kind: OpKind, df: &mut DataFlow) {
    let regs: Vec<&Register> = form.operands.iter().filter_map(|o| o.as_reg()).collect();
    match kind {
        OpKind::Branch => {
            // cbz/cbnz/tbz/tbnz and br/blr read their register operand.
            for r in regs {
                add_source(df, r);
            }
        }
        OpKind::Compare => {
            for r in regs {
                add_source(df, r);
            }
            for op in &form.operands {
                if let Some(m) = op.as_mem() {
                    df.mem_loads.push(m.clone());
                    add_mem_sources(df, m);
                }
            }
        }
        OpKind::Load => {
            let dest_count = if matches!(form.mnemonic.as_str(), "ldp" | "ldnp") {
                2
            } else {
                1
            };
            for (i, r) in regs.iter().enumerate() {
                if i < dest_count {
                    add_dest(df, r, false);
                } else {
                    add_source(df, r);
                }
            }
            for op in &form.operands {
                if let Some(m) = op.as_mem() {
                    df.mem_loads.push(m.clone());
                    add_mem_sources(df, m);
                }
            }
        }
        OpKind::Store => {
            for r in regs {
                add_source(df, r);
            }
            for op in &form.operands {
                if let Some(m) = op.as_mem() {
                    df.mem_stores.push(m.clone());
                    add_mem_sources(df, m);
                }
            }
        }
        OpKind::Compute | OpKind::Unknown | OpKind::Push | OpKind::Pop => {
            for (i, op) in form.operands.iter().enumerate() {
                match op {
                    Operand::Reg(r) => {
                        if i == 0 {
                            add_dest(df, r, false);
                        } else {
                            add_source(df, r);
                        }
                    }
                    Operand::Mem(m) => {
                        df.mem_loads.push(m.clone());
                        add_mem_sources(df, m);
                    }
                    _ => {}
                }
            }
        }
    }
}

fn x86_data_flow(form: &InstructionForm, kind: OpKind, df: &mut DataFlow) {
    match kind {
        OpKind::Branch => {}
        OpKind::Compare => {
            for op in &form.operands {
                match op {
                    Operand::Reg(r) => add_source(df, r),
                    Operand::Mem(m) => {
                        df.mem_loads.push(m.clone());
                        add_mem_sources(df, m);
                    }
                    _ => {}
                }
            }
        }
        OpKind::Push => {
            for op in &form.operands {
                if let Some(r) = op.as_reg() {
                    add_source(df, r);
                }
            }
        }
        OpKind::Pop => {
            for op in &form.operands {
                if let Some(r) = op.as_reg() {
                    add_dest(df, r, false);
                }
            }
        }
        OpKind::Load | OpKind::Store | OpKind::Compute | OpKind::Unknown => {
            let last = form.operands.len().saturating_sub(1);
            let is_lea = form.mnemonic.starts_with("lea");
            for (i, op) in form.operands.iter().enumerate() {
                match op {
                    Operand::Reg(r) => {
                        if i == last && !form.operands.is_empty() {
                            add_dest(df, r, false);
                            if x86_reads_destination(form) {
                                add_source(df, r);
                            }
                        } else {
                            add_source(df, r);
                        }
                    }
                    Operand::Mem(m) => {
                        if is_lea {
                            add_mem_sources(df, m);
                        } else if i == last {
                            df.mem_stores.push(m.clone());
                            if x86_reads_destination(form) {
                                df.mem_loads.push(m.clone());
                            }
                            add_mem_sources(df, m);
                        } else {
                            df.mem_loads.push(m.clone());
                            add_mem_sources(df, m);
                        }
                    }
                    _ => {}
                }
            }
        }
    }
}

/// Zero idioms and immediate moves do not depend on their destination's
/// prior value; drop the self-source and flag the break.
fn apply_break_rules(form: &InstructionForm, isa: Isa, df: &mut DataFlow) {
    if df.destinations.is_empty() {
        return;
    }
    let has_reg_sources = !df.sources.is_empty();
    let idiom = match isa {
        Isa::X86 => {
            prefix_match(&form.mnemonic, X86_ZERO_IDIOM_PREFIXES) && same_reg_operands(form)
        }
        Isa::Aarch64 => form.mnemonic == "eor" && same_reg_operands(form),
    };
    if idiom {
        for d in &df.destinations {
            df.sources.remove(&d.reg);
        }
        df.breaks_dependency = true;
        return;
    }
    // A write with no true register reads (immediate moves, register
    // materialization) starts a fresh chain.
    if !has_reg_sources && df.mem_loads.is_empty() {
        df.breaks_dependency = true;
    }
}

fn same_reg_operands(form: &InstructionForm) -> bool {
    let regs: Vec<&Register> = form.operands.iter().filter_map(|o| o.as_reg()).collect();
    regs.len() >= 2 && regs.windows(2).all(|w| w[0].canonical == w[1].canonical)
}

/// A memory-including computing form split into its two parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitForm {
    /// The memory read feeding the computation.
    pub load_mem: MemOperand,
    /// The arithmetic part, memory operand replaced by an intermediate.
    pub compute: InstructionForm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitResult {
    Unchanged,
    Split(SplitForm),
}

/// Split a computing form with a memory source into load + compute parts.
/// Pure loads, stores, branches, and register-only forms are unchanged.
pub fn split_memory_form(form: &InstructionForm, isa: Isa) -> SplitResult {
    if !form.is_instruction() {
        return SplitResult::Unchanged;
    }
    let kind = classify(form, isa);
    if !matches!(kind, OpKind::Compute | OpKind::Compare | OpKind::Unknown) {
        return SplitResult::Unchanged;
    }
    let mem = form.operands.iter().find_map(|o| o.as_mem()).cloned();
    let Some(mem) = mem else {
        return SplitResult::Unchanged;
    };
    if isa == Isa::X86 && form.mnemonic.starts_with("lea") {
        return SplitResult::Unchanged;
    }

    // The intermediate takes the class of the first register operand so the
    // compute part matches the register form of the instruction in the DB.
    let proto = form
        .operands
        .iter()
        .filter_map(|o| o.as_reg())
        .next()
        .cloned()
        .unwrap_or(Register {
            text: "<mem>".to_string(),
            canonical: "<mem>".to_string(),
            class: RegClass::Gp,
            width: 64,
            zero: false,
        });
    let intermediate = Register {
        text: "<mem>".to_string(),
        canonical: "<mem>".to_string(),
        class: proto.class,
        width: proto.width,
        zero: false,
    };
    let mut compute = form.clone();
    for op in &mut compute.operands {
        if op.as_mem().is_some() {
            *op = Operand::Reg(intermediate.clone());
        }
    }
    SplitResult::Split(SplitForm {
        load_mem: mem,
        compute,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_file;

    fn flow(text: &str, isa: Isa) -> DataFlow {
        let forms = parse_file(text, isa);
        data_flow(&forms[0], isa)
    }

    fn dest_names(df: &DataFlow) -> Vec<&str> {
        df.destinations.iter().map(|d| d.reg.as_str()).collect()
    }

    #[test]
    fn a64_first_operand_is_destination() {
        let df = flow("fadd d3, d1, d30", Isa::Aarch64);
        assert_eq!(dest_names(&df), vec!["v3"]);
        assert!(df.sources.contains("v1") && df.sources.contains("v30"));
        assert!(!df.breaks_dependency);
    }

    #[test]
    fn a64_store_with_post_increment() {
        let df = flow("str d5, [x14], 8", Isa::Aarch64);
        assert!(df.sources.contains("v5") && df.sources.contains("x14"));
        assert_eq!(
            df.destinations,
            vec![Destination {
                reg: "x14".to_string(),
                writeback: true
            }]
        );
        assert_eq!(df.mem_stores.len(), 1);
        assert!(df.mem_loads.is_empty());
    }

    #[test]
    fn x86_zero_idiom_breaks_dependency() {
        let df = flow("xorps %xmm0, %xmm0", Isa::X86);
        assert_eq!(dest_names(&df), vec!["xmm0"]);
        assert!(df.breaks_dependency);
        assert!(!df.sources.contains("xmm0"));
    }

    #[test]
    fn a64_eor_same_registers_breaks() {
        let df = flow("eor x5, x5, x5", Isa::Aarch64);
        assert!(df.breaks_dependency);
        assert!(df.sources.is_empty());
    }

    #[test]
    fn compare_has_no_destination() {
        let df = flow("cmp x7, x15", Isa::Aarch64);
        assert!(df.destinations.is_empty());
        assert_eq!(df.sources.iter().collect::<Vec<_>>(), vec!["x15", "x7"]);
    }

    #[test]
    fn immediate_move_breaks_dependency() {
        let df = flow("mov x0, 1", Isa::Aarch64);
        assert!(df.breaks_dependency);
        assert_eq!(dest_names(&df), vec!["x0"]);
        let df = flow("movl $111, %ebx", Isa::X86);
        assert!(df.breaks_dependency);
    }

    #[test]
    fn x86_rmw_reads_its_destination() {
        let df = flow("addq %rax, %rbx", Isa::X86);
        assert_eq!(dest_names(&df), vec!["rbx"]);
        assert!(df.sources.contains("rbx") && df.sources.contains("rax"));
    }

    #[test]
    fn x86_three_operand_vex_does_not_read_destination() {
        let df = flow("vaddsd %xmm0, %xmm1, %xmm2", Isa::X86);
        assert_eq!(dest_names(&df), vec!["xmm2"]);
        assert!(!df.sources.contains("xmm2"));
        // FMA accumulates into the destination
        let df = flow("vfmadd231sd %xmm0, %xmm1, %xmm2", Isa::X86);
        assert!(df.sources.contains("xmm2"));
    }

    #[test]
    fn x86_pure_move_does_not_read_destination() {
        let df = flow("movq %rax, %rbx", Isa::X86);
        assert_eq!(dest_names(&df), vec!["rbx"]);
        assert!(!df.sources.contains("rbx"));
    }

    #[test]
    fn x86_load_address_registers_are_sources() {
        let df = flow("movsd (%rsi,%rbx,8), %xmm0", Isa::X86);
        assert!(df.sources.contains("rsi") && df.sources.contains("rbx"));
        assert_eq!(df.mem_loads.len(), 1);
        assert_eq!(dest_names(&df), vec!["xmm0"]);
    }

    #[test]
    fn x86_store_address_registers_are_sources() {
        let df = flow("movups %xmm0, (%rdx,%rax,8)", Isa::X86);
        assert!(df.sources.contains("rdx") && df.sources.contains("rax"));
        assert_eq!(df.mem_stores.len(), 1);
        assert!(df.destinations.is_empty());
    }

    #[test]
    fn x86_memory_destination_rmw() {
        let df = flow("addq %rax, (%rbx)", Isa::X86);
        assert!(df.destinations.is_empty());
        assert_eq!(df.mem_loads.len(), 1);
        assert_eq!(df.mem_stores.len(), 1);
        assert!(df.sources.contains("rax") && df.sources.contains("rbx"));
    }

    #[test]
    fn zero_register_never_appears() {
        let df = flow("subs xzr, x7, x15", Isa::Aarch64);
        assert!(df.destinations.is_empty());
        assert!(df.sources.contains("x7") && df.sources.contains("x15"));
    }

    #[test]
    fn unknown_mnemonic_gets_conservative_default() {
        let df = flow("frobnicate x3, x1, x2", Isa::Aarch64);
        assert!(df.warning.is_some());
        assert_eq!(dest_names(&df), vec!["x3"]);
        assert!(df.sources.contains("x1") && df.sources.contains("x2"));
    }

    #[test]
    fn split_x86_memory_add() {
        let forms = parse_file("addpd (%rax), %xmm1", Isa::X86);
        let SplitResult::Split(split) = split_memory_form(&forms[0], Isa::X86) else {
            panic!("expected a split");
        };
        assert_eq!(split.load_mem.base.as_ref().unwrap().canonical, "rax");
        assert_eq!(split.compute.mnemonic, "addpd");
        assert!(split.compute.operands.iter().all(|o| o.as_mem().is_none()));
        // idempotent: the compute part does not split again
        assert_eq!(
            split_memory_form(&split.compute, Isa::X86),
            SplitResult::Unchanged
        );
    }

    #[test]
    fn pure_load_and_register_forms_unchanged() {
        let forms = parse_file("ldr d31, [x15]\nfadd d3, d1, d30", Isa::Aarch64);
        assert_eq!(
            split_memory_form(&forms[0], Isa::Aarch64),
            SplitResult::Unchanged
        );
        assert_eq!(
            split_memory_form(&forms[1], Isa::Aarch64),
            SplitResult::Unchanged
        );
        let forms = parse_file("movsd (%rax), %xmm0", Isa::X86);
        assert_eq!(split_memory_form(&forms[0], Isa::X86), SplitResult::Unchanged);
    }
}
