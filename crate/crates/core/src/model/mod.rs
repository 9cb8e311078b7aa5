//! Machine model: the port list and the instruction database.
//!
//! A model declares the execution ports of one micro-architecture (including
//! pseudo-ports for shared resources like a divider pipeline) and a database
//! of per-instruction-form records: latency, inverse throughput, and port
//! pressure. Pressure can be given explicitly or derived from candidate
//! ports by even distribution.

mod file;

pub use file::{load_model, load_model_str, store_model, store_model_str};

use std::collections::BTreeSet;
use std::fmt;

use crate::cycles::Cy;
use crate::parse::{InstructionForm, Operand, RegClass};

/// One element of an operand-class signature.
///
/// A register pattern without a width is a wildcard that matches any width
/// of that class. Memory patterns match every addressing mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OperandPattern {
    Reg { class: RegClass, width: Option<u16> },
    Mem,
    Imm,
    Ident,
}

/// Match quality used to rank candidate database entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum MatchQuality {
    No,
    Wildcard,
    Exact,
}

impl OperandPattern {
    /// The textual token used in model files and measurement keys:
    /// `gpr64`, `fpr` (wildcard), `vr128`, `mem`, `imm`, `id`.
    pub fn token(&self) -> String {
        match self {
            OperandPattern::Reg { class, width } => {
                let prefix = match class {
                    RegClass::Gp => "gpr",
                    RegClass::Fp => "fpr",
                    RegClass::Vector => "vr",
                    RegClass::Flag => "flag",
                };
                match width {
                    Some(w) => format!("{prefix}{w}"),
                    None => prefix.to_string(),
                }
            }
            OperandPattern::Mem => "mem".to_string(),
            OperandPattern::Imm => "imm".to_string(),
            OperandPattern::Ident => "id".to_string(),
        }
    }

    pub fn parse(tok: &str) -> Result<OperandPattern, String> {
        let tok = tok.trim();
        match tok {
            "mem" => return Ok(OperandPattern::Mem),
            "imm" => return Ok(OperandPattern::Imm),
            "id" => return Ok(OperandPattern::Ident),
            _ => {}
        }
        for (prefix, class) in [
            ("gpr", RegClass::Gp),
            ("fpr", RegClass::Fp),
            ("vr", RegClass::Vector),
            ("flag", RegClass::Flag),
        ] {
            if let Some(rest) = tok.strip_prefix(prefix) {
                if rest.is_empty() {
                    return Ok(OperandPattern::Reg { class, width: None });
                }
                if let Ok(w) = rest.parse::<u16>() {
                    return Ok(OperandPattern::Reg {
                        class,
                        width: Some(w),
                    });
                }
            }
        }
        Err(format!(
            "unknown operand token `{tok}` (expected gpr/fpr/vr[width], mem, imm, or id)"
        ))
    }

    fn matches(&self, concrete: &OperandPattern) -> MatchQuality {
        match (self, concrete) {
            (
                OperandPattern::Reg { class, width },
                OperandPattern::Reg {
                    class: cc,
                    width: cw,
                },
            ) => {
                if class != cc {
                    MatchQuality::No
                } else if width.is_none() {
                    MatchQuality::Wildcard
                } else if width == cw {
                    MatchQuality::Exact
                } else {
                    MatchQuality::No
                }
            }
            (OperandPattern::Mem, OperandPattern::Mem)
            | (OperandPattern::Imm, OperandPattern::Imm)
            | (OperandPattern::Ident, OperandPattern::Ident) => MatchQuality::Exact,
            _ => MatchQuality::No,
        }
    }
}

/// The concrete signature of a parsed instruction form.
pub fn signature_of(form: &InstructionForm) -> Vec<OperandPattern> {
    form.operands
        .iter()
        .map(|op| match op {
            Operand::Reg(r) => OperandPattern::Reg {
                class: r.class,
                width: Some(r.width),
            },
            Operand::Mem(_) => OperandPattern::Mem,
            Operand::Imm(_) | Operand::FpImm(_) => OperandPattern::Imm,
            Operand::Ident(_) => OperandPattern::Ident,
        })
        .collect()
}

/// `fpr64_fpr64_fpr64` — the form key used in measurement records.
pub fn signature_string(sig: &[OperandPattern]) -> String {
    sig.iter().map(|p| p.token()).collect::<Vec<_>>().join("_")
}

pub fn parse_signature(s: &str) -> Result<Vec<OperandPattern>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split('_').map(OperandPattern::parse).collect()
}

/// `cycles` of occupancy spread evenly across `ports`.
///
/// `(1, {P0,P1})` means half a cycle on each of the two ports; a singleton
/// group is simply that many cycles on that port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PressureItem {
    pub cycles: Cy,
    pub ports: Vec<String>,
}

/// One instruction database record.
#[derive(Debug, Clone, PartialEq)]
pub struct DbEntry {
    pub mnemonic: String,
    pub signature: Vec<OperandPattern>,
    /// Producer-to-consumer latency in cycles.
    pub latency: Cy,
    /// Inverse throughput in cycles. With `candidate_ports` this is the
    /// single-port value that gets distributed; with explicit pressure it is
    /// the effective cycles-per-instruction.
    pub inverse_throughput: Cy,
    /// Port pressure, used verbatim when present.
    pub pressure: Vec<PressureItem>,
    /// Ports the form may issue to; pressure derives from these when no
    /// explicit pressure is given.
    pub candidate_ports: Option<Vec<String>>,
    /// Latency of an address-register writeback, when it differs from
    /// `latency` (AArch64 post/pre-increment updates).
    pub writeback_latency: Option<Cy>,
}

impl DbEntry {
    pub fn key(&self) -> String {
        format!("{}-{}", self.mnemonic, signature_string(&self.signature))
    }
}

/// Even distribution of a single-port inverse throughput over candidates:
/// `t` cycles over `n` equivalent ports puts `t/n` on each, total `t`.
pub fn derive_pressure(
    inverse_throughput: Cy,
    candidate_ports: &[String],
) -> Result<Vec<PressureItem>, ModelError> {
    if candidate_ports.is_empty() {
        return Err(ModelError::EmptyPortSet);
    }
    if inverse_throughput.is_zero() || inverse_throughput.is_negative() {
        return Err(ModelError::NonPositiveCycles {
            entry: "derive_pressure".to_string(),
        });
    }
    Ok(vec![PressureItem {
        cycles: inverse_throughput,
        ports: candidate_ports.to_vec(),
    }])
}

/// Synthesize the database record of a load+compute split:
/// throughput is the maximum of the parts, latency their sum, pressure
/// the union of both parts' pressure.
pub fn combine_split(load: &DbEntry, compute: &DbEntry) -> DbEntry {
    let mut pressure = load.pressure.clone();
    pressure.extend(compute.pressure.iter().cloned());
    DbEntry {
        mnemonic: compute.mnemonic.clone(),
        signature: compute.signature.clone(),
        latency: load.latency + compute.latency,
        inverse_throughput: load.inverse_throughput.max(compute.inverse_throughput),
        pressure,
        candidate_ports: None,
        writeback_latency: compute.writeback_latency,
    }
}

/// An architecture description plus its instruction database.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineModel {
    pub format_version: u32,
    pub arch_name: String,
    /// Execution ports and shared-resource pseudo-ports, in report order.
    pub ports: Vec<String>,
    pub default_load_latency: Cy,
    pub default_load_throughput: Cy,
    pub default_load_pressure: Vec<PressureItem>,
    pub default_store_pressure: Vec<PressureItem>,
    pub entries: Vec<DbEntry>,
}

impl MachineModel {
    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p == name)
    }

    /// Expand pressure items into a per-port cycle vector aligned with
    /// `self.ports`. Items referencing unknown ports are a load-time error,
    /// so expansion cannot fail here.
    pub fn expand_pressure(&self, items: &[PressureItem]) -> Vec<Cy> {
        let mut out = vec![Cy::ZERO; self.ports.len()];
        for item in items {
            let share = item.cycles / Cy::int(item.ports.len() as i64);
            for port in &item.ports {
                if let Some(i) = self.port_index(port) {
                    out[i] += share;
                }
            }
        }
        out
    }

    /// Effective pressure of an entry: explicit items when present,
    /// otherwise derived from candidate ports.
    pub fn entry_pressure(&self, entry: &DbEntry) -> Vec<Cy> {
        self.expand_pressure(&self.effective_items(entry))
    }

    pub fn effective_items(&self, entry: &DbEntry) -> Vec<PressureItem> {
        if !entry.pressure.is_empty() {
            return entry.pressure.clone();
        }
        match &entry.candidate_ports {
            Some(ports) if !entry.inverse_throughput.is_zero() => {
                derive_pressure(entry.inverse_throughput, ports).unwrap_or_default()
            }
            _ => Vec::new(),
        }
    }

    /// Look up the database record for a parsed instruction form.
    ///
    /// Exact-width matches are preferred over wildcard-width ones; among
    /// equally good candidates the first declared entry wins, so lookup is
    /// deterministic for a given model file.
    pub fn lookup(&self, form: &InstructionForm) -> Option<&DbEntry> {
        let sig = signature_of(form);
        self.lookup_signature(&form.mnemonic, &sig)
    }

    pub fn lookup_signature(&self, mnemonic: &str, sig: &[OperandPattern]) -> Option<&DbEntry> {
        let mut best: Option<(usize, &DbEntry)> = None;
        for entry in &self.entries {
            if entry.mnemonic != mnemonic || entry.signature.len() != sig.len() {
                continue;
            }
            let mut exact = 0usize;
            let mut ok = true;
            for (pat, concrete) in entry.signature.iter().zip(sig) {
                match pat.matches(concrete) {
                    MatchQuality::No => {
                        ok = false;
                        break;
                    }
                    MatchQuality::Exact => exact += 1,
                    MatchQuality::Wildcard => {}
                }
            }
            if ok && best.map_or(true, |(bex, _)| exact > bex) {
                best = Some((exact, entry));
            }
        }
        best.map(|(_, e)| e)
    }

    /// Exact-signature entry lookup, used by measurement import.
    pub fn entry_mut(
        &mut self,
        mnemonic: &str,
        sig: &[OperandPattern],
    ) -> Option<&mut DbEntry> {
        self.entries
            .iter_mut()
            .find(|e| e.mnemonic == mnemonic && e.signature == sig)
    }

    /// Pseudo-entry for the load half of a split memory form.
    pub fn load_part_entry(&self) -> DbEntry {
        DbEntry {
            mnemonic: "load".to_string(),
            signature: vec![OperandPattern::Mem],
            latency: self.default_load_latency,
            inverse_throughput: self.default_load_throughput,
            pressure: self.default_load_pressure.clone(),
            candidate_ports: None,
            writeback_latency: None,
        }
    }

    /// Validate internal consistency; returns entry-level diagnostics.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = BTreeSet::new();
        for p in &self.ports {
            if !names.insert(p.clone()) {
                return Err(ModelError::DuplicatePort(p.clone()));
            }
        }
        for items in [&self.default_load_pressure, &self.default_store_pressure] {
            self.validate_items(items, "defaults")?;
        }
        let mut keys = BTreeSet::new();
        for entry in &self.entries {
            let key = entry.key();
            if !keys.insert(key.clone()) {
                return Err(ModelError::DuplicateEntry(key));
            }
            self.validate_items(&entry.pressure, &key)?;
            if let Some(ports) = &entry.candidate_ports {
                if ports.is_empty() {
                    return Err(ModelError::EmptyPortSet);
                }
                for p in ports {
                    if self.port_index(p).is_none() {
                        return Err(ModelError::UnknownPort {
                            entry: key.clone(),
                            port: p.clone(),
                        });
                    }
                }
            }
            if entry.latency.is_negative() || entry.inverse_throughput.is_negative() {
                return Err(ModelError::NonPositiveCycles { entry: key });
            }
        }
        Ok(())
    }

    fn validate_items(&self, items: &[PressureItem], entry: &str) -> Result<(), ModelError> {
        for item in items {
            if item.cycles.is_zero() || item.cycles.is_negative() {
                return Err(ModelError::NonPositiveCycles {
                    entry: entry.to_string(),
                });
            }
            if item.ports.is_empty() {
                return Err(ModelError::EmptyPortSet);
            }
            for p in &item.ports {
                if self.port_index(p).is_none() {
                    return Err(ModelError::UnknownPort {
                        entry: entry.to_string(),
                        port: p.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Non-fatal advisory checks. The port model expects every instruction
    /// to add up to at least one cycle over all ports; database rows that
    /// fall short are reported, not rejected.
    pub fn lint(&self) -> Vec<String> {
        let mut out = Vec::new();
        for entry in &self.entries {
            let total: Cy = self.entry_pressure(entry).into_iter().sum();
            if total.is_zero() {
                continue; // branches and similar: legitimately no modeled port
            }
            if total < Cy::int(1) {
                out.push(format!(
                    "{}: total pressure {} is below one cycle per instruction",
                    entry.key(),
                    total.render(2)
                ));
            }
            if total < entry.inverse_throughput {
                out.push(format!(
                    "{}: total pressure {} is below the inverse throughput {}",
                    entry.key(),
                    total.render(2),
                    entry.inverse_throughput.render(2)
                ));
            }
        }
        out
    }
}

/// Errors from loading or validating a machine model.
#[derive(Debug)]
pub enum ModelError {
    Io(String, std::io::Error),
    Parse(String),
    DuplicatePort(String),
    DuplicateEntry(String),
    UnknownPort { entry: String, port: String },
    NonPositiveCycles { entry: String },
    EmptyPortSet,
    BadToken(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Io(path, e) => write!(f, "cannot read model `{path}`: {e}"),
            ModelError::Parse(e) => write!(f, "model file: {e}"),
            ModelError::DuplicatePort(p) => write!(f, "duplicate port `{p}`"),
            ModelError::DuplicateEntry(k) => write!(f, "duplicate instruction entry `{k}`"),
            ModelError::UnknownPort { entry, port } => {
                write!(f, "entry `{entry}` references undeclared port `{port}`")
            }
            ModelError::NonPositiveCycles { entry } => {
                write!(f, "entry `{entry}` has a non-positive cycle value")
            }
            ModelError::EmptyPortSet => f.write_str("empty port set"),
            ModelError::BadToken(t) => f.write_str(t),
        }
    }
}

impl std::error::Error for ModelError {}
