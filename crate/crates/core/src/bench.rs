//! Semi-automatic instruction database construction: generate latency and
//! throughput microbenchmark kernels for a target instruction form, and
//! import measured values back into a machine model.
//!
//! Generation only writes assembly; running the benchmarks is the user's
//! side of the pipeline (any runner that can time a marked loop works).
//! Generated kernels carry the standard byte markers, so the analyzer can
//! check them itself: a latency kernel must show an LCD of
//! `repeat x latency`, a throughput kernel must show none.

use std::fmt;

use crate::cycles::Cy;
use crate::model::{
    derive_pressure, parse_signature, signature_of, signature_string, DbEntry, MachineModel,
    ModelError, OperandPattern,
};
use crate::parse::{InstructionForm, Isa, Operand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Latency,
    Throughput,
}

impl BenchMode {
    pub fn name(&self) -> &'static str {
        match self {
            BenchMode::Latency => "latency",
            BenchMode::Throughput => "throughput",
        }
    }
}

impl std::str::FromStr for BenchMode {
    type Err = String;
    fn from_str(s: &str) -> Result<BenchMode, String> {
        match s.to_ascii_lowercase().as_str() {
            "latency" | "lat" => Ok(BenchMode::Latency),
            "throughput" | "tp" => Ok(BenchMode::Throughput),
            other => Err(format!("unknown bench mode `{other}`")),
        }
    }
}

/// A generated microbenchmark kernel.
#[derive(Debug, Clone)]
pub struct BenchKernel {
    /// `mnemonic-signature` key of the measured form.
    pub target: String,
    pub mode: BenchMode,
    /// Complete assembly file: init, markers, loop, markers.
    pub body: String,
    pub repeat: u32,
    pub registers_used: Vec<String>,
}

#[derive(Debug)]
pub enum BenchError {
    /// Memory forms need hand-written benchmarks (address setup, strides).
    MemoryOperand(String),
    NotAnInstruction,
    NoDestination(String),
    OutOfRegisters { needed: u32, available: u32 },
    BadRecord { line: u32, reason: String },
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::MemoryOperand(key) => write!(
                f,
                "form `{key}` has a memory operand; manual benchmark required"
            ),
            BenchError::NotAnInstruction => f.write_str("template is not an instruction"),
            BenchError::NoDestination(key) => write!(
                f,
                "form `{key}` has no register destination; a latency chain cannot be built"
            ),
            BenchError::OutOfRegisters { needed, available } => write!(
                f,
                "throughput unrolling of {needed} needs more architectural registers than the {available} available"
            ),
            BenchError::BadRecord { line, reason } => {
                write!(f, "measurement record line {line}: {reason}")
            }
        }
    }
}

impl std::error::Error for BenchError {}

struct RegPools {
    /// Two chain registers (latency mode ping-pongs pure moves).
    gp_chain: [&'static str; 2],
    gp_aux: &'static [&'static str],
    gp_dests: &'static [&'static str],
    fp_chain: [&'static str; 2],
    fp_aux: &'static [&'static str],
    fp_dests: &'static [&'static str],
}

// Marker and counter registers stay out of every pool:
// AArch64 reserves x0 (counter) and x1 (markers); x86 reserves rcx and rbx.
const A64_POOLS: RegPools = RegPools {
    gp_chain: ["x2", "x3"],
    gp_aux: &["x4", "x5", "x6"],
    gp_dests: &[
        "x4", "x5", "x6", "x7", "x8", "x9", "x10", "x11", "x12", "x13", "x14", "x15", "x16",
        "x17",
    ],
    fp_chain: ["0", "1"],
    fp_aux: &["2", "3", "4"],
    fp_dests: &[
        "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "15", "16", "17", "18", "19",
        "20", "21", "22", "23", "24", "25", "26", "27", "28", "29",
    ],
};

const X86_POOLS: RegPools = RegPools {
    gp_chain: ["rax", "rdx"],
    gp_aux: &["rsi", "rdi", "r8"],
    gp_dests: &["rsi", "rdi", "r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15"],
    fp_chain: ["xmm0", "xmm1"],
    fp_aux: &["xmm2", "xmm3", "xmm4"],
    fp_dests: &[
        "xmm5", "xmm6", "xmm7", "xmm8", "xmm9", "xmm10", "xmm11", "xmm12", "xmm13", "xmm14",
        "xmm15",
    ],
};

/// Generate a self-contained microbenchmark for one instruction form.
///
/// `template` is a parsed example of the form (`fadd d0, d1, d2`). Latency
/// mode chains every instance through its predecessor's destination;
/// throughput mode gives instances disjoint destinations and shared
/// read-only sources.
pub fn generate_bench(
    template: &InstructionForm,
    mode: BenchMode,
    isa: Isa,
    repeat: u32,
) -> Result<BenchKernel, BenchError> {
    if !template.is_instruction() {
        return Err(BenchError::NotAnInstruction);
    }
    let key = format!(
        "{}-{}",
        template.mnemonic,
        signature_string(&signature_of(template))
    );
    if template.operands.iter().any(|o| o.as_mem().is_some()) {
        return Err(BenchError::MemoryOperand(key));
    }

    let flow = crate::semantics::data_flow(template, isa);
    if mode == BenchMode::Latency && flow.destinations.is_empty() {
        return Err(BenchError::NoDestination(key));
    }

    let repeat = repeat.max(1);
    let pools = match isa {
        Isa::X86 => &X86_POOLS,
        Isa::Aarch64 => &A64_POOLS,
    };

    let generator = Generator {
        template,
        isa,
        pools,
        mode,
    };
    let (instances, used) = generator.instances(repeat)?;
    let body = generator.wrap(&instances, &used, &flow);

    Ok(BenchKernel {
        target: key,
        mode,
        body,
        repeat,
        registers_used: used,
    })
}

struct Generator<'a> {
    template: &'a InstructionForm,
    isa: Isa,
    pools: &'a RegPools,
    mode: BenchMode,
}

impl Generator<'_> {
    fn is_fp_template(&self) -> bool {
        self.template
            .operands
            .iter()
            .filter_map(|o| o.as_reg())
            .next()
            .map(|r| r.class != crate::parse::RegClass::Gp)
            .unwrap_or(false)
    }

    /// AArch64 FP registers keep the template's width letter (d/s/q...).
    fn fp_name(&self, index: &str) -> String {
        match self.isa {
            Isa::X86 => index.to_string(),
            Isa::Aarch64 => {
                let letter = self
                    .template
                    .operands
                    .iter()
                    .filter_map(|o| o.as_reg())
                    .find(|r| r.class != crate::parse::RegClass::Gp)
                    .and_then(|r| r.text.chars().next())
                    .unwrap_or('d');
                format!("{letter}{index}")
            }
        }
    }

    fn chain(&self, slot: usize) -> String {
        if self.is_fp_template() {
            self.fp_name(self.pools.fp_chain[slot])
        } else {
            self.pools.gp_chain[slot].to_string()
        }
    }

    fn aux(&self, i: usize) -> String {
        if self.is_fp_template() {
            self.fp_name(self.pools.fp_aux[i % self.pools.fp_aux.len()])
        } else {
            self.pools.gp_aux[i % self.pools.gp_aux.len()].to_string()
        }
    }

    fn dest_pool(&self, k: usize) -> Option<String> {
        if self.is_fp_template() {
            self.pools.fp_dests.get(k).map(|r| self.fp_name(r))
        } else {
            self.pools.gp_dests.get(k).map(|r| r.to_string())
        }
    }

    /// Does the destination slot naturally read itself? AArch64 chains put
    /// the chain register in both the destination and first source slot;
    /// x86 two-operand forms read their destination anyway.
    fn stationary(&self) -> bool {
        match self.isa {
            Isa::Aarch64 => self.reg_slots() >= 2,
            Isa::X86 => {
                self.reg_slots() >= 2
                    && crate::semantics::data_flow(self.template, self.isa)
                        .destinations
                        .iter()
                        .any(|d| {
                            crate::semantics::data_flow(self.template, self.isa)
                                .sources
                                .contains(&d.reg)
                        })
            }
        }
    }

    fn reg_slots(&self) -> usize {
        self.template
            .operands
            .iter()
            .filter(|o| o.as_reg().is_some())
            .count()
    }

    /// Destination operand index: first on AArch64, last on x86.
    fn dest_index(&self) -> usize {
        match self.isa {
            Isa::Aarch64 => 0,
            Isa::X86 => self.template.operands.len() - 1,
        }
    }

    fn instances(&self, repeat: u32) -> Result<(Vec<String>, Vec<String>), BenchError> {
        let mut used: Vec<String> = Vec::new();
        let mut note = |r: &String| {
            if !used.contains(r) {
                used.push(r.clone());
            }
        };
        let mut lines = Vec::with_capacity(repeat as usize);
        for k in 0..repeat as usize {
            let mut ops: Vec<String> = Vec::with_capacity(self.template.operands.len());
            let dest_idx = self.dest_index();
            let mut aux_i = 0usize;
            // First source slot in template order (for chaining).
            let first_src_idx = (0..self.template.operands.len())
                .filter(|&i| i != dest_idx)
                .find(|&i| self.template.operands[i].as_reg().is_some());

            for (i, op) in self.template.operands.iter().enumerate() {
                let text = match op {
                    Operand::Reg(_) => {
                        let r = match self.mode {
                            BenchMode::Latency => {
                                if self.stationary() {
                                    if i == dest_idx || Some(i) == first_src_idx {
                                        self.chain(0)
                                    } else {
                                        let a = self.aux(aux_i);
                                        aux_i += 1;
                                        a
                                    }
                                } else if i == dest_idx {
                                    self.chain((k + 1) % 2)
                                } else {
                                    self.chain(k % 2)
                                }
                            }
                            BenchMode::Throughput => {
                                if i == dest_idx {
                                    self.dest_pool(k).ok_or(BenchError::OutOfRegisters {
                                        needed: repeat,
                                        available: if self.is_fp_template() {
                                            self.pools.fp_dests.len() as u32
                                        } else {
                                            self.pools.gp_dests.len() as u32
                                        },
                                    })?
                                } else {
                                    let a = self.aux(aux_i);
                                    aux_i += 1;
                                    a
                                }
                            }
                        };
                        note(&r);
                        match self.isa {
                            Isa::X86 => format!("%{r}"),
                            Isa::Aarch64 => r,
                        }
                    }
                    Operand::Imm(v) => match self.isa {
                        Isa::X86 => format!("${v}"),
                        Isa::Aarch64 => v.to_string(),
                    },
                    Operand::FpImm(text) => text.clone(),
                    Operand::Ident(s) => s.clone(),
                    Operand::Mem(_) => unreachable!("memory templates rejected earlier"),
                };
                ops.push(text);
            }
            lines.push(format!("\t{}\t{}", self.template.mnemonic, ops.join(", ")));
        }
        Ok((lines, used))
    }

    /// Emit the full file. The byte markers sit inside the loop around the
    /// instance block only, so self-analysis sees exactly the measured
    /// instructions and not the loop counter.
    fn wrap(
        &self,
        instances: &[String],
        used: &[String],
        flow: &crate::semantics::DataFlow,
    ) -> String {
        let mut out = String::new();
        let comment = match self.isa {
            Isa::X86 => "#",
            Isa::Aarch64 => "//",
        };
        out.push_str(&format!(
            "{comment} {} benchmark for {}, {} instances per loop iteration\n",
            self.mode.name(),
            self.template.mnemonic,
            instances.len()
        ));
        out.push_str(&format!(
            "{comment} counter register holds the iteration count on entry\n"
        ));
        out.push_str("\t.text\n\t.globl\tbench\nbench:\n");

        // Seed every register the loop reads or writes.
        for r in used {
            match self.isa {
                Isa::Aarch64 => {
                    if r.starts_with('x') || r.starts_with('w') {
                        out.push_str(&format!("\tmov\t{r}, 7\n"));
                    } else {
                        out.push_str(&format!("\tfmov\t{r}, 1.0\n"));
                    }
                }
                Isa::X86 => {
                    if r.starts_with("xmm") {
                        out.push_str(&format!("\tpxor\t%{r}, %{r}\n"));
                    } else {
                        out.push_str(&format!("\tmovq\t$7, %{r}\n"));
                    }
                }
            }
        }

        // Read-modify-write forms accumulate into their destination, which
        // would chain instances across iterations in throughput mode; a
        // zeroing idiom per destination breaks those chains.
        let mut breaks: Vec<String> = Vec::new();
        if self.mode == BenchMode::Throughput {
            let rmw = flow
                .destinations
                .iter()
                .any(|d| flow.sources.contains(&d.reg));
            if rmw && self.isa == Isa::X86 {
                for line in instances {
                    if let Some(dest) = line.rsplit(' ').next() {
                        let dest = dest.trim();
                        let idiom = if dest.starts_with("%xmm") {
                            format!("\txorps\t{dest}, {dest}")
                        } else {
                            format!("\txorq\t{dest}, {dest}")
                        };
                        if !breaks.contains(&idiom) {
                            breaks.push(idiom);
                        }
                    }
                }
            }
        }

        match self.isa {
            Isa::Aarch64 => {
                out.push_str(".Lbench:\n");
                out.push_str("\tmov\tx1, 111\n\t.byte\t213,3,32,31\n");
                for line in breaks.iter().chain(instances) {
                    out.push_str(line);
                    out.push('\n');
                }
                out.push_str("\tmov\tx1, 222\n\t.byte\t213,3,32,31\n");
                out.push_str("\tsubs\tx0, x0, 1\n\tbne\t.Lbench\n\tret\n");
            }
            Isa::X86 => {
                out.push_str(".Lbench:\n");
                out.push_str("\tmovl\t$111, %ebx\n\t.byte\t100,103,144\n");
                for line in breaks.iter().chain(instances) {
                    out.push_str(line);
                    out.push('\n');
                }
                out.push_str("\tmovl\t$222, %ebx\n\t.byte\t100,103,144\n");
                out.push_str("\tsubq\t$1, %rcx\n\tjne\t.Lbench\n\tret\n");
            }
        }
        out
    }
}

/// `latency` or `throughput`, the two measurable scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Latency,
    InverseThroughput,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::InverseThroughput => "throughput",
        }
    }
}

/// One measured value for one instruction form.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub mnemonic: String,
    pub signature: Vec<OperandPattern>,
    pub metric: Metric,
    pub value: Cy,
    /// Where the number came from (file name, benchmark run id).
    pub source: String,
}

impl MeasurementRecord {
    pub fn key(&self) -> String {
        format!("{}-{}", self.mnemonic, signature_string(&self.signature))
    }
}

/// Parse a measurement file: one record per line in the form
/// `<mnemonic>-<signature>-<metric>: <value>`, e.g.
/// `fadd-fpr64_fpr64_fpr64-latency: 6`. `#` starts a comment.
pub fn parse_measurements(text: &str, source: &str) -> Result<Vec<MeasurementRecord>, BenchError> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u32 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| BenchError::BadRecord {
            line: line_no,
            reason,
        };
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| bad("expected `key: value`".to_string()))?;
        let value: Cy = value
            .trim()
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        if value.is_zero() || value.is_negative() {
            return Err(bad(format!("value {} must be positive", value.render(2))));
        }
        let mut parts = key.trim().rsplitn(3, '-');
        let metric = match parts.next() {
            Some("latency") => Metric::Latency,
            Some("throughput") => Metric::InverseThroughput,
            other => {
                return Err(bad(format!(
                    "unknown metric `{}` (expected latency or throughput)",
                    other.unwrap_or("")
                )))
            }
        };
        let signature = parse_signature(parts.next().ok_or_else(|| bad("missing signature".into()))?)
            .map_err(|e| bad(e))?;
        let mnemonic = parts
            .next()
            .ok_or_else(|| bad("missing mnemonic".into()))?
            .to_ascii_lowercase();
        records.push(MeasurementRecord {
            mnemonic,
            signature,
            metric,
            value,
            source: source.to_string(),
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeKind {
    Created,
    Updated,
    Noop,
    Conflict,
}

/// One entry of the import change log.
#[derive(Debug, Clone)]
pub struct ChangeEvent {
    pub key: String,
    pub metric: Metric,
    pub old: Option<Cy>,
    pub new: Cy,
    pub kind: ChangeKind,
    pub source: String,
}

impl fmt::Display for ChangeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let metric = self.metric.name();
        match self.kind {
            ChangeKind::Created => write!(
                f,
                "created {} with {metric} {} (from {}); declare ports before analysis",
                self.key,
                self.new.render(2),
                self.source
            ),
            ChangeKind::Updated => write!(
                f,
                "updated {} {metric}: {} -> {} (from {})",
                self.key,
                self.old.map(|c| c.render(2)).unwrap_or_default(),
                self.new.render(2),
                self.source
            ),
            ChangeKind::Noop => write!(
                f,
                "unchanged {} {metric} = {} (from {})",
                self.key,
                self.new.render(2),
                self.source
            ),
            ChangeKind::Conflict => write!(
                f,
                "conflict on {} {metric}: database has {}, measurement says {} (from {}); kept the database value (use --force to overwrite)",
                self.key,
                self.old.map(|c| c.render(2)).unwrap_or_default(),
                self.new.render(2),
                self.source
            ),
        }
    }
}

/// Import measurements into a model. Conflicting values are logged and kept
/// unchanged unless `force` is set; matching values are no-ops; unknown
/// forms become fresh entries awaiting port declarations. Derived pressure
/// is recomputed when a throughput update lands on a ports-derived entry.
pub fn import_measurements(
    model: &MachineModel,
    records: &[MeasurementRecord],
    force: bool,
) -> Result<(MachineModel, Vec<ChangeEvent>), ModelError> {
    let mut updated = model.clone();
    let mut log = Vec::with_capacity(records.len());
    for rec in records {
        let event_base = |old: Option<Cy>, kind: ChangeKind| ChangeEvent {
            key: rec.key(),
            metric: rec.metric,
            old,
            new: rec.value,
            kind,
            source: rec.source.clone(),
        };
        match updated.entry_mut(&rec.mnemonic, &rec.signature) {
            Some(entry) => {
                let old = match rec.metric {
                    Metric::Latency => entry.latency,
                    Metric::InverseThroughput => entry.inverse_throughput,
                };
                if old == rec.value {
                    log.push(event_base(Some(old), ChangeKind::Noop));
                } else if !force {
                    log.push(event_base(Some(old), ChangeKind::Conflict));
                } else {
                    let was_derived = entry.candidate_ports.as_ref().is_some_and(|ports| {
                        derive_pressure(entry.inverse_throughput, ports)
                            .map(|items| items == entry.pressure)
                            .unwrap_or(false)
                    });
                    match rec.metric {
                        Metric::Latency => entry.latency = rec.value,
                        Metric::InverseThroughput => entry.inverse_throughput = rec.value,
                    }
                    if rec.metric == Metric::InverseThroughput && was_derived {
                        let ports = entry.candidate_ports.clone().unwrap_or_default();
                        entry.pressure = derive_pressure(rec.value, &ports)?;
                    }
                    log.push(event_base(Some(old), ChangeKind::Updated));
                }
            }
            None => {
                let (latency, throughput) = match rec.metric {
                    Metric::Latency => (rec.value, Cy::ZERO),
                    Metric::InverseThroughput => (Cy::ZERO, rec.value),
                };
                updated.entries.push(DbEntry {
                    mnemonic: rec.mnemonic.clone(),
                    signature: rec.signature.clone(),
                    latency,
                    inverse_throughput: throughput,
                    pressure: Vec::new(),
                    candidate_ports: None,
                    writeback_latency: None,
                });
                log.push(event_base(None, ChangeKind::Created));
            }
        }
    }
    updated.validate()?;
    Ok((updated, log))
}
