//! x86 AT&T operand syntax: `$imm`, `%reg`, `disp(base,index,scale)`.

use super::registers::canonicalize;
use super::{Isa, MemOperand, Operand};

pub(super) fn parse_operands(rest: &str) -> Result<Vec<Operand>, String> {
    let rest = rest.trim();
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(rest)
        .into_iter()
        .map(|tok| parse_operand(tok.trim()))
        .collect()
}

/// Split on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_operand(tok: &str) -> Result<Operand, String> {
    if tok.is_empty() {
        return Err("empty operand".to_string());
    }
    if let Some(imm) = tok.strip_prefix('$') {
        return match parse_int(imm) {
            Some(v) => Ok(Operand::Imm(v)),
            None => Ok(Operand::Ident(imm.to_string())),
        };
    }
    if let Some(name) = tok.strip_prefix('%') {
        return match canonicalize(name, Isa::X86) {
            Some(r) => Ok(Operand::Reg(r)),
            None => Err(format!("unknown register `%{name}`")),
        };
    }
    if tok.contains('(') || tok.ends_with(')') {
        return parse_memory(tok);
    }
    // Indirect jump targets and plain symbols.
    Ok(Operand::Ident(tok.to_string()))
}

/// `disp(base,index,scale)` with every component optional but the parens.
fn parse_memory(tok: &str) -> Result<Operand, String> {
    let open = tok.find('(').ok_or_else(|| format!("bad memory operand `{tok}`"))?;
    if !tok.ends_with(')') {
        return Err(format!("bad memory operand `{tok}`"));
    }
    let disp_text = &tok[..open];
    let inner = &tok[open + 1..tok.len() - 1];

    let mut mem = MemOperand {
        scale: 1,
        ..MemOperand::default()
    };
    if !disp_text.is_empty() {
        match parse_int(disp_text) {
            Some(v) => mem.displacement = v,
            None => mem.symbol = Some(disp_text.to_string()),
        }
    }

    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() > 3 {
        return Err(format!("bad memory operand `{tok}`"));
    }
    if let Some(base) = parts.first().filter(|p| !p.is_empty()) {
        let name = base
            .strip_prefix('%')
            .ok_or_else(|| format!("bad base register `{base}`"))?;
        mem.base = Some(canonicalize(name, Isa::X86).ok_or_else(|| format!("unknown register `%{name}`"))?);
    }
    if let Some(index) = parts.get(1).filter(|p| !p.is_empty()) {
        let name = index
            .strip_prefix('%')
            .ok_or_else(|| format!("bad index register `{index}`"))?;
        mem.index = Some(canonicalize(name, Isa::X86).ok_or_else(|| format!("unknown register `%{name}`"))?);
    }
    if let Some(scale) = parts.get(2).filter(|p| !p.is_empty()) {
        let v: u32 = scale
            .parse()
            .map_err(|_| format!("bad scale `{scale}`"))?;
        if !matches!(v, 1 | 2 | 4 | 8) {
            return Err(format!("scale must be 1, 2, 4 or 8, got {v}"));
        }
        mem.scale = v;
    }
    Ok(Operand::Mem(mem))
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
        Operand::Reg(r) => format!("%{}", r.text),
        Operand::Imm(v) => format!("${v}"),
        Operand::FpImm(text) => format!("${text}"),
        Operand::Ident(s) => s.clone(),
        Operand::Mem(m) => {
            let mut out = String::new();
            if let Some(sym) = &m.symbol {
                out.push_str(sym);
            } else if m.displacement != 0 {
                out.push_str(&m.displacement.to_string());
            }
            out.push('(');
            if let Some(base) = &m.base {
                out.push('%');
                out.push_str(&base.text);
            }
            if let Some(index) = &m.index {
                out.push_str(",%");
                out.push_str(&index.text);
                if m.scale != 1 {
                    out.push(',');
                    out.push_str(&m.scale.to_string());
                }
            }
            out.push(')');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn immediate_forms() {
        assert_eq!(parse_operand("$111").unwrap(), Operand::Imm(111));
        assert_eq!(parse_operand("$-8").unwrap(), Operand::Imm(-8));
        assert_eq!(parse_operand("$0x1f").unwrap(), Operand::Imm(31));
        assert_eq!(
            parse_operand("$sym").unwrap(),
            Operand::Ident("sym".to_string())
        );
    }

    #[test]
    fn memory_variants() {
        let ops = parse_operands("(%rax), 8(%rbx), (,%rcx,8), foo(%rip)").unwrap();
        assert_eq!(ops.len(), 4);
        let m = ops[1].as_mem().unwrap();
        assert_eq!(m.displacement, 8);
        let m = ops[2].as_mem().unwrap();
        assert!(m.base.is_none());
        assert_eq!(m.scale, 8);
        let m = ops[3].as_mem().unwrap();
        assert_eq!(m.symbol.as_deref(), Some("foo"));
        assert!(m.base.as_ref().unwrap().zero);
    }

    #[test]
    fn bad_scale_rejected() {
        assert!(parse_operand("(%rax,%rbx,3)").is_err());
    }
}
