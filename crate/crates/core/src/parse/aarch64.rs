//! AArch64 operand syntax: registers, `#`-or-bare immediates, and
//! `[base, offset]` addressing with optional writeback.

use super::registers::canonicalize;
use super::{Isa, MemOperand, Operand, Writeback, WritebackKind};

pub(super) fn parse_operands(rest: &str) -> Result<Vec<Operand>, String> {
    let rest = rest.trim();
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    let mut ops = Vec::new();
    let mut chars = rest.char_indices().peekable();
    let mut start = 0usize;
    let mut depth = 0usize;
    let mut cuts = Vec::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '[' | '{' => depth += 1,
            ']' | '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                cuts.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
        let _ = &chars; // silence unused peekable warning paths
    }
    cuts.push((start, rest.len()));

    let raw: Vec<&str> = cuts.iter().map(|&(a, b)| rest[a..b].trim()).collect();
    let mut idx = 0;
    while idx < raw.len() {
        let tok = raw[idx];
        if tok.starts_with('[') {
            // Post-index writeback is `[base], imm` — the increment arrives
            // as the next top-level token.
            let (mem, consumed) = parse_memory(tok, raw.get(idx + 1).copied())?;
            ops.push(Operand::Mem(mem));
            idx += 1 + consumed;
            continue;
        }
        ops.push(parse_operand(tok)?);
        idx += 1;
    }
    Ok(ops)
}

fn parse_operand(tok: &str) -> Result<Operand, String> {
    if tok.is_empty() {
        return Err("empty operand".to_string());
    }
    if let Some(r) = canonicalize(tok, Isa::Aarch64) {
        return Ok(Operand::Reg(r));
    }
    if let Some(imm) = tok.strip_prefix('#') {
        return parse_immediate(imm);
    }
    if tok.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
        return parse_immediate(tok);
    }
    // Branch targets, symbols, condition codes, shift keywords.
    Ok(Operand::Ident(tok.to_string()))
}

fn parse_immediate(text: &str) -> Result<Operand, String> {
    if let Some(v) = parse_int(text) {
        return Ok(Operand::Imm(v));
    }
    if looks_like_float(text) {
        return Ok(Operand::FpImm(text.to_string()));
    }
    Ok(Operand::Ident(text.to_string()))
}

fn looks_like_float(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

/// Parse `[...]`, `[...]!`, and the two-token post-index form.
/// Returns the operand plus how many extra tokens were consumed (0 or 1).
fn parse_memory(tok: &str, next: Option<&str>) -> Result<(MemOperand, usize), String> {
    let (inner, pre_writeback) = match tok.strip_suffix('!') {
        Some(t) => (t, true),
        None => (tok, false),
    };
    let inner = inner
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("bad memory operand `{tok}`"))?;

    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.is_empty() || parts[0].is_empty() {
        return Err(format!("bad memory operand `{tok}`"));
    }

    let mut mem = MemOperand {
        scale: 1,
        ..MemOperand::default()
    };
    mem.base = Some(
        canonicalize(parts[0], Isa::Aarch64).ok_or_else(|| format!("unknown base register `{}`", parts[0]))?,
    );

    if let Some(second) = parts.get(1) {
        if let Some(r) = canonicalize(second, Isa::Aarch64) {
            mem.index = Some(r);
            // Optional `lsl n` / extend modifier in the third slot.
            if let Some(modifier) = parts.get(2) {
                let (kw, amount) = match modifier.split_once(char::is_whitespace) {
                    Some((k, a)) => (k, a.trim()),
                    None => (*modifier, ""),
                };
                let shift = amount
                    .strip_prefix('#')
                    .unwrap_or(amount)
                    .parse::<u32>()
                    .ok();
                match kw {
                    "lsl" => {
                        let n = shift.ok_or_else(|| format!("bad shift `{modifier}`"))?;
                        if n > 4 {
                            return Err(format!("shift amount {n} out of range"));
                        }
                        mem.scale = 1 << n;
                    }
                    "sxtw" | "uxtw" | "sxtx" | "uxtx" => {
                        mem.index_extend = Some(kw.to_string());
                        if let Some(n) = shift {
                            mem.scale = 1 << n;
                        }
                    }
                    _ => return Err(format!("unknown index modifier `{modifier}`")),
                }
            }
        } else {
            if parts.len() > 2 {
                return Err(format!("bad memory operand `{tok}`"));
            }
            let imm = second.strip_prefix('#').unwrap_or(second);
            match parse_int(imm) {
                Some(v) => mem.displacement = v,
                // Relocation operators like `#:lo12:sym` stay symbolic.
                None => mem.symbol = Some(second.to_string()),
            }
        }
    }

    if pre_writeback {
        mem.writeback = Some(Writeback {
            kind: WritebackKind::Pre,
            increment: mem.displacement,
        });
        return Ok((mem, 0));
    }

    // `[x14], 8` — next token is the post-increment.
    if let Some(next) = next {
        let imm = next.strip_prefix('#').unwrap_or(next);
        if let Some(v) = parse_int(imm) {
            mem.writeback = Some(Writeback {
                kind: WritebackKind::Post,
                increment: v,
            });
            return Ok((mem, 1));
        }
    }
    Ok((mem, 0))
}

fn parse_int(s: &str) -> Option<i64> {
    let s = s.trim();
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let v = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).ok()?
    } else {
        s.parse::<i64>().ok()?
    };
    Some(if neg { -v } else { v })
}

pub(super) fn render_operand(op: &Operand) -> String {
    match op {
        Operand::Reg(r) => r.text.clone(),
        Operand::Imm(v) => v.to_string(),
        Operand::FpImm(text) => text.clone(),
        Operand::Ident(s) => s.clone(),
        Operand::Mem(m) => {
            let mut out = String::from("[");
            if let Some(base) = &m.base {
                out.push_str(&base.text);
            }
            if let Some(index) = &m.index {
                out.push_str(", ");
                out.push_str(&index.text);
                if let Some(ext) = &m.index_extend {
                    out.push_str(", ");
                    out.push_str(ext);
                    if m.scale != 1 {
                        out.push_str(&format!(" {}", m.scale.trailing_zeros()));
                    }
                } else if m.scale != 1 {
                    out.push_str(&format!(", lsl {}", m.scale.trailing_zeros()));
                }
            } else if let Some(sym) = &m.symbol {
                out.push_str(", ");
                out.push_str(sym);
            } else if m.displacement != 0 {
                out.push_str(&format!(", {}", m.displacement));
            }
            out.push(']');
            match m.writeback {
                Some(Writeback {
                    kind: WritebackKind::Pre,
                    ..
                }) => out.push('!'),
                Some(Writeback {
                    kind: WritebackKind::Post,
                    increment,
                }) => out.push_str(&format!(", {increment}")),
                None => {}
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_and_hash_immediates() {
        let ops = parse_operands("x16, x15, 24").unwrap();
        assert_eq!(ops[2], Operand::Imm(24));
        let ops = parse_operands("x1, #111").unwrap();
        assert_eq!(ops[1], Operand::Imm(111));
    }

    #[test]
    fn float_immediate() {
        let ops = parse_operands("d9, 2.5e-1").unwrap();
        assert_eq!(ops[1], Operand::FpImm("2.5e-1".to_string()));
    }

    #[test]
    fn memory_offset_forms() {
        let ops = parse_operands("d0, [x15, 8]").unwrap();
        let m = ops[1].as_mem().unwrap();
        assert_eq!(m.displacement, 8);
        assert!(m.index.is_none());

        let ops = parse_operands("d0, [x15, #-8]").unwrap();
        assert_eq!(ops[1].as_mem().unwrap().displacement, -8);
    }

    #[test]
    fn pre_index_writeback() {
        let ops = parse_operands("d0, [x14, 16]!").unwrap();
        let m = ops[1].as_mem().unwrap();
        assert_eq!(m.displacement, 16);
        assert_eq!(
            m.writeback,
            Some(Writeback {
                kind: WritebackKind::Pre,
                increment: 16
            })
        );
    }

    #[test]
    fn scaled_index() {
        let ops = parse_operands("d31, [x15, x18, lsl 3]").unwrap();
        let m = ops[1].as_mem().unwrap();
        assert_eq!(m.scale, 8);
        let ops = parse_operands("d31, [x15, x18, lsl #3]").unwrap();
        assert_eq!(ops[1].as_mem().unwrap().scale, 8);
    }

    #[test]
    fn extended_index() {
        let ops = parse_operands("s0, [x2, w19, sxtw 2]").unwrap();
        let m = ops[1].as_mem().unwrap();
        assert_eq!(m.index_extend.as_deref(), Some("sxtw"));
        assert_eq!(m.scale, 4);
    }

    #[test]
    fn relocation_offset_stays_symbolic() {
        let ops = parse_operands("d0, [x2, #:lo12:.LC0]").unwrap();
        let m = ops[1].as_mem().unwrap();
        assert_eq!(m.symbol.as_deref(), Some("#:lo12:.LC0"));
        assert_eq!(render_operand(&ops[1]), "[x2, #:lo12:.LC0]");
    }

    #[test]
    fn condition_code_stays_ident() {
        let ops = parse_operands("x0, x1, x2, ne").unwrap();
        assert_eq!(ops[3], Operand::Ident("ne".to_string()));
    }
}
