//! Assembly parsing: raw compiler output in, [`InstructionForm`] values out.
//!
//! Two syntaxes are supported: x86 AT&T (what gcc/icc emit with `-S`) and
//! AArch64. Parsing never aborts on a strange line — anything that does not
//! parse cleanly is kept as a form flagged `unrecognized`, so the analysis
//! can warn instead of dying halfway through a 5000-line listing.

mod aarch64;
mod markers;
mod registers;
mod x86;

pub use markers::{find_markers, MarkerError};
pub use registers::canonicalize;

use std::fmt;

use serde::{Deserialize, Serialize};

/// Instruction set the source text is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Isa {
    X86,
    Aarch64,
}

impl Isa {
    pub fn name(&self) -> &'static str {
        match self {
            Isa::X86 => "x86",
            Isa::Aarch64 => "aarch64",
        }
    }
}

impl std::str::FromStr for Isa {
    type Err = String;
    fn from_str(s: &str) -> Result<Isa, String> {
        match s.to_ascii_lowercase().as_str() {
            "x86" | "x86_64" | "x86-64" | "amd64" => Ok(Isa::X86),
            "aarch64" | "arm64" | "arm" => Ok(Isa::Aarch64),
            other => Err(format!("unknown ISA `{other}` (expected x86 or aarch64)")),
        }
    }
}

/// Architectural register class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegClass {
    Gp,
    Fp,
    Vector,
    Flag,
}

/// A register operand.
///
/// `text` preserves the spelling in the source (`d31`, `eax`); `canonical`
/// names the architectural register it aliases (`v31`, `rax`), which is what
/// dependency analysis keys on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub text: String,
    pub canonical: String,
    pub class: RegClass,
    pub width: u16,
    /// Reads and writes of a zero register (xzr/wzr) carry no dependencies.
    pub zero: bool,
}

/// Address-update mode of an AArch64 memory operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WritebackKind {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Writeback {
    pub kind: WritebackKind,
    pub increment: i64,
}

/// A memory operand: `base + index*scale + displacement`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct MemOperand {
    pub base: Option<Register>,
    pub index: Option<Register>,
    /// Multiplier on the index register; AArch64 `lsl n` maps to `2^n`.
    pub scale: u32,
    pub displacement: i64,
    /// Symbolic displacement (`foo(%rip)` and friends), kept for round-trips.
    pub symbol: Option<String>,
    /// AArch64 index extension (`sxtw`, `uxtw`, ...), kept for round-trips.
    pub index_extend: Option<String>,
    pub writeback: Option<Writeback>,
}

/// One operand of an instruction form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    Reg(Register),
    Mem(MemOperand),
    Imm(i64),
    /// Floating-point immediate (`fmov d9, 2.5e-1`), original spelling.
    FpImm(String),
    /// Branch targets, symbols, condition codes.
    Ident(String),
}

impl Operand {
    pub fn as_reg(&self) -> Option<&Register> {
        match self {
            Operand::Reg(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_mem(&self) -> Option<&MemOperand> {
        match self {
            Operand::Mem(m) => Some(m),
            _ => None,
        }
    }
}

/// An assembler directive (`.byte 213,3,32,31`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub name: String,
    pub args: Vec<String>,
}

/// How a source line classifies after parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Instruction,
    Directive,
    Label,
    Blank,
}

/// One parsed assembly line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionForm {
    /// 1-based position in the parsed text.
    pub line_number: u32,
    /// Lowercased mnemonic; empty for labels, directives and blank lines.
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    pub label: Option<String>,
    pub directive: Option<Directive>,
    pub comment: Option<String>,
    /// Set when the line did not parse cleanly; holds the reason.
    pub unrecognized: Option<String>,
    /// Raw source text of the line.
    pub source: String,
}

impl InstructionForm {
    pub fn kind(&self) -> LineKind {
        if !self.mnemonic.is_empty() {
            LineKind::Instruction
        } else if self.directive.is_some() {
            LineKind::Directive
        } else if self.label.is_some() {
            LineKind::Label
        } else {
            LineKind::Blank
        }
    }

    pub fn is_instruction(&self) -> bool {
        self.kind() == LineKind::Instruction
    }

    /// Serialize back to assembly text. Re-parsing the result yields a form
    /// structurally equal to this one (whitespace aside).
    pub fn render(&self, isa: Isa) -> String {
        if self.unrecognized.is_some() {
            return self.source.trim().to_string();
        }
        let mut out = String::new();
        if let Some(label) = &self.label {
            out.push_str(label);
            out.push(':');
        }
        if let Some(d) = &self.directive {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push('.');
            out.push_str(&d.name);
            if !d.args.is_empty() {
                out.push(' ');
                out.push_str(&d.args.join(", "));
            }
        } else if !self.mnemonic.is_empty() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&self.mnemonic);
            for (i, op) in self.operands.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                out.push_str(&render_operand(op, isa));
            }
        }
        out
    }

    /// Structural equality for round-trip checks: everything that carries
    /// meaning, ignoring line numbers, comments and raw source text.
    pub fn structurally_eq(&self, other: &InstructionForm) -> bool {
        self.mnemonic == other.mnemonic
            && self.operands == other.operands
            && self.label == other.label
            && self.directive == other.directive
            && self.unrecognized.is_some() == other.unrecognized.is_some()
    }
}

fn render_operand(op: &Operand, isa: Isa) -> String {
    match isa {
        Isa::X86 => x86::render_operand(op),
        Isa::Aarch64 => aarch64::render_operand(op),
    }
}

/// The marked loop body, extracted from a parsed file.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub forms: Vec<InstructionForm>,
    pub isa: Isa,
}

impl Kernel {
    pub fn instructions(&self) -> impl Iterator<Item = &InstructionForm> {
        self.forms.iter().filter(|f| f.is_instruction())
    }
}

/// Parse assembly text into one form per line.
///
/// Every line yields exactly one form, `line_number` equal to its 1-based
/// position. Lines that do not parse come back flagged `unrecognized`
/// rather than failing the whole file.
pub fn parse_file(text: &str, isa: Isa) -> Vec<InstructionForm> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_line(line, i as u32 + 1, isa))
        .collect()
}

fn parse_line(raw: &str, line_number: u32, isa: Isa) -> InstructionForm {
    let mut form = InstructionForm {
        line_number,
        mnemonic: String::new(),
        operands: Vec::new(),
        label: None,
        directive: None,
        comment: None,
        unrecognized: None,
        source: raw.to_string(),
    };

    // Comments: `#` on x86, `//` on AArch64 (where `#` prefixes immediates).
    let mut line = raw;
    let comment_pos = match isa {
        Isa::X86 => line.find('#'),
        Isa::Aarch64 => line.find("//"),
    };
    if let Some(pos) = comment_pos {
        form.comment = Some(line[pos..].trim().to_string());
        line = &line[..pos];
    }
    let mut line = line.trim();
    if line.is_empty() {
        return form;
    }

    // Leading label, possibly followed by more on the same line.
    if let Some(colon) = line.find(':') {
        let head = &line[..colon];
        if is_label_name(head) {
            form.label = Some(head.to_string());
            line = line[colon + 1..].trim();
            if line.is_empty() {
                return form;
            }
        }
    }

    if let Some(rest) = line.strip_prefix('.') {
        // Directive, unless this is a local label missed above.
        let (name, args) = match rest.split_once(char::is_whitespace) {
            Some((n, a)) => (n, a.trim()),
            None => (rest, ""),
        };
        let args = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().to_string()).collect()
        };
        form.directive = Some(Directive {
            name: name.to_string(),
            args,
        });
        return form;
    }

    let (mnemonic, rest) = match line.split_once(char::is_whitespace) {
        Some((m, r)) => (m, r.trim()),
        None => (line, ""),
    };
    form.mnemonic = mnemonic.to_ascii_lowercase();

    let parsed = match isa {
        Isa::X86 => x86::parse_operands(rest),
        Isa::Aarch64 => aarch64::parse_operands(rest),
    };
    match parsed {
        Ok(ops) => form.operands = ops,
        Err(reason) => {
            form.unrecognized = Some(format!("line {line_number}: {reason}"));
        }
    }
    form
}

fn is_label_name(s: &str) -> bool {
    !s.is_empty()
        && !s.contains(char::is_whitespace)
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '@'))
        && !s.chars().next().is_some_and(|c| c.is_ascii_digit())
}

/// Error from [`detect_isa`]: neither lexicon matched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectError;

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("cannot detect the ISA from the source; pass --isa x86 or --isa aarch64")
    }
}

impl std::error::Error for DetectError {}

/// Guess the ISA by counting lines that match each register/mnemonic lexicon.
pub fn detect_isa(text: &str) -> Result<Isa, DetectError> {
    let mut x86_score = 0usize;
    let mut a64_score = 0usize;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('.') {
            continue;
        }
        if trimmed.contains('%') || trimmed.contains('$') {
            x86_score += 1;
            continue;
        }
        if trimmed.contains('[')
            || trimmed
                .split(|c: char| !c.is_ascii_alphanumeric())
                .any(|tok| registers::is_aarch64_reg_name(tok))
        {
            a64_score += 1;
        }
    }
    match (x86_score, a64_score) {
        (0, 0) => Err(DetectError),
        (x, a) if x > a => Ok(Isa::X86),
        (x, a) if a > x => Ok(Isa::Aarch64),
        _ => Err(DetectError),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aarch64_indexed_load() {
        let forms = parse_file("ldr d31, [x15, x18, lsl 3]", Isa::Aarch64);
        assert_eq!(forms.len(), 1);
        let f = &forms[0];
        assert_eq!(f.mnemonic, "ldr");
        assert_eq!(f.operands.len(), 2);
        let r = f.operands[0].as_reg().unwrap();
        assert_eq!((r.text.as_str(), r.class, r.width), ("d31", RegClass::Fp, 64));
        assert_eq!(r.canonical, "v31");
        let m = f.operands[1].as_mem().unwrap();
        assert_eq!(m.base.as_ref().unwrap().canonical, "x15");
        assert_eq!(m.index.as_ref().unwrap().canonical, "x18");
        assert_eq!(m.scale, 8);
        assert_eq!(m.displacement, 0);
    }

    #[test]
    fn aarch64_three_register_fadd() {
        let forms = parse_file("fadd d3, d1, d30", Isa::Aarch64);
        let f = &forms[0];
        assert_eq!(f.mnemonic, "fadd");
        assert_eq!(f.operands.len(), 3);
        assert!(f.operands.iter().all(|o| o.as_reg().is_some()));
    }

    #[test]
    fn blank_line_classifies_blank() {
        let forms = parse_file("\n", Isa::Aarch64);
        assert_eq!(forms.len(), 1);
        assert_eq!(forms[0].kind(), LineKind::Blank);
        assert!(forms[0].mnemonic.is_empty());
    }

    #[test]
    fn aarch64_post_increment_store() {
        let forms = parse_file("str d5, [x14], 8", Isa::Aarch64);
        let m = forms[0].operands[1].as_mem().unwrap();
        assert_eq!(m.base.as_ref().unwrap().canonical, "x14");
        assert_eq!(
            m.writeback,
            Some(Writeback {
                kind: WritebackKind::Post,
                increment: 8
            })
        );
        assert_eq!(m.displacement, 0);
    }

    #[test]
    fn line_numbers_strictly_increase() {
        let text = "fadd d0, d1, d2\n\nldr d3, [x0]\n.text\nlbl:";
        let forms = parse_file(text, Isa::Aarch64);
        let numbers: Vec<u32> = forms.iter().map(|f| f.line_number).collect();
        assert_eq!(numbers, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn x86_att_memory_operand() {
        let forms = parse_file("addpd (%rax), %xmm1", Isa::X86);
        let f = &forms[0];
        assert_eq!(f.mnemonic, "addpd");
        let m = f.operands[0].as_mem().unwrap();
        assert_eq!(m.base.as_ref().unwrap().canonical, "rax");
        let r = f.operands[1].as_reg().unwrap();
        assert_eq!(r.canonical, "xmm1");
    }

    #[test]
    fn x86_scaled_index_with_displacement() {
        let forms = parse_file("movsd -24(%rsi,%rbx,8), %xmm0", Isa::X86);
        let m = forms[0].operands[0].as_mem().unwrap();
        assert_eq!(m.displacement, -24);
        assert_eq!(m.base.as_ref().unwrap().canonical, "rsi");
        assert_eq!(m.index.as_ref().unwrap().canonical, "rbx");
        assert_eq!(m.scale, 8);
    }

    #[test]
    fn sub_register_aliases_canonicalize() {
        let forms = parse_file("movl $111, %ebx", Isa::X86);
        let f = &forms[0];
        assert_eq!(f.operands[0], Operand::Imm(111));
        let r = f.operands[1].as_reg().unwrap();
        assert_eq!(r.canonical, "rbx");
        assert_eq!(r.width, 32);
    }

    #[test]
    fn unknown_mnemonic_still_parses() {
        let forms = parse_file("fictitious_op x0", Isa::Aarch64);
        let f = &forms[0];
        assert_eq!(f.mnemonic, "fictitious_op");
        assert!(f.unrecognized.is_none());
        assert!(f.is_instruction());
    }

    #[test]
    fn garbled_operands_flag_unrecognized() {
        let forms = parse_file("ldr d0, [x15", Isa::Aarch64);
        assert!(forms[0].unrecognized.is_some());
    }

    #[test]
    fn detect_isa_from_lexicon() {
        assert_eq!(detect_isa("movl $1, %eax\naddq %rax, %rbx"), Ok(Isa::X86));
        assert_eq!(
            detect_isa("fadd d1, d31, d0\nldr d2, [x15]"),
            Ok(Isa::Aarch64)
        );
        assert!(detect_isa(".text\n.align 4").is_err());
    }

    #[test]
    fn render_round_trips_structurally() {
        let cases = [
            (Isa::Aarch64, "ldr d31, [x15, x18, lsl 3]"),
            (Isa::Aarch64, "str d5, [x14], 8"),
            (Isa::Aarch64, "str d20, [x15, -24]"),
            (Isa::Aarch64, "fadd d3, d1, d30"),
            (Isa::Aarch64, "add x16, x15, 24"),
            (Isa::X86, "movsd -24(%rsi,%rbx,8), %xmm0"),
            (Isa::X86, "movl $111, %ebx"),
            (Isa::X86, "jb ..B1.8"),
        ];
        for (isa, text) in cases {
            let forms = parse_file(text, isa);
            let rendered = forms[0].render(isa);
            let reparsed = parse_file(&rendered, isa);
            assert!(
                forms[0].structurally_eq(&reparsed[0]),
                "round-trip failed for `{text}` -> `{rendered}`"
            );
        }
    }
}
