//! Canonical register maps.
//!
//! Sub-register aliases collapse onto one architectural id: `eax` and `al`
//! are views of `rax`, `d31` and `q31` are views of `v31`. Dependency
//! analysis works on the canonical names only.

use super::{Isa, RegClass, Register};

/// Resolve a register spelling (without any `%` sigil) to a [`Register`].
/// Returns `None` when the name is not a register of the given ISA.
pub fn canonicalize(name: &str, isa: Isa) -> Option<Register> {
    match isa {
        Isa::X86 => x86_register(name),
        Isa::Aarch64 => aarch64_register(name),
    }
}

pub(super) fn is_aarch64_reg_name(tok: &str) -> bool {
    aarch64_register(tok).is_some()
}

fn reg(text: &str, canonical: String, class: RegClass, width: u16, zero: bool) -> Register {
    Register {
        text: text.to_string(),
        canonical,
        class,
        width,
        zero,
    }
}

fn x86_register(name: &str) -> Option<Register> {
    let lower = name.to_ascii_lowercase();
    let n = lower.as_str();

    // Legacy GP families: each tuple is (64, 32, 16, 8lo, 8hi).
    const GP: &[(&str, &str, &str, &str, &str)] = &[
        ("rax", "eax", "ax", "al", "ah"),
        ("rbx", "ebx", "bx", "bl", "bh"),
        ("rcx", "ecx", "cx", "cl", "ch"),
        ("rdx", "edx", "dx", "dl", "dh"),
        ("rsi", "esi", "si", "sil", ""),
        ("rdi", "edi", "di", "dil", ""),
        ("rbp", "ebp", "bp", "bpl", ""),
        ("rsp", "esp", "sp", "spl", ""),
    ];
    for &(r64, r32, r16, r8, r8h) in GP {
        let width = if n == r64 {
            64
        } else if n == r32 {
            32
        } else if n == r16 {
            16
        } else if !r8.is_empty() && n == r8 || !r8h.is_empty() && n == r8h {
            8
        } else {
            continue;
        };
        return Some(reg(&lower, r64.to_string(), RegClass::Gp, width, false));
    }

    // r8..r15 with b/w/d suffixes.
    if let Some(rest) = n.strip_prefix('r') {
        let (digits, width) = match rest.strip_suffix(['b', 'w', 'd']) {
            Some(d) => {
                let w = match rest.as_bytes()[rest.len() - 1] {
                    b'b' => 8,
                    b'w' => 16,
                    _ => 32,
                };
                (d, w)
            }
            None => (rest, 64),
        };
        if let Ok(idx) = digits.parse::<u8>() {
            if (8..=15).contains(&idx) {
                return Some(reg(&lower, format!("r{idx}"), RegClass::Gp, width, false));
            }
        }
    }

    // SSE/AVX families share one canonical id per register number.
    for (prefix, width) in [("xmm", 128u16), ("ymm", 256), ("zmm", 512)] {
        if let Some(digits) = n.strip_prefix(prefix) {
            if let Ok(idx) = digits.parse::<u8>() {
                if idx <= 31 {
                    return Some(reg(&lower, format!("xmm{idx}"), RegClass::Vector, width, false));
                }
            }
        }
    }

    if let Some(digits) = n.strip_prefix('k') {
        if let Ok(idx) = digits.parse::<u8>() {
            if idx <= 7 {
                return Some(reg(&lower, format!("k{idx}"), RegClass::Vector, 64, false));
            }
        }
    }

    // The instruction pointer never carries a data dependency.
    if n == "rip" || n == "eip" {
        return Some(reg(&lower, "rip".to_string(), RegClass::Gp, 64, true));
    }
    if n == "rflags" || n == "eflags" {
        return Some(reg(&lower, "rflags".to_string(), RegClass::Flag, 64, false));
    }
    None
}

fn aarch64_register(name: &str) -> Option<Register> {
    if name.is_empty() || !name.is_ascii() {
        return None;
    }
    let lower = name.to_ascii_lowercase();
    let n = lower.as_str();

    match n {
        "sp" | "wsp" => {
            let width = if n == "sp" { 64 } else { 32 };
            return Some(reg(&lower, "sp".to_string(), RegClass::Gp, width, false));
        }
        "xzr" | "wzr" => {
            let width = if n == "xzr" { 64 } else { 32 };
            return Some(reg(&lower, "xzr".to_string(), RegClass::Gp, width, true));
        }
        "lr" => return Some(reg(&lower, "x30".to_string(), RegClass::Gp, 64, false)),
        _ => {}
    }

    let (head, rest) = lower.split_at(1);
    let digits = rest.split('.').next().unwrap_or(rest);
    let idx: u8 = digits.parse().ok()?;

    match head {
        "x" | "w" if idx <= 30 && rest == digits => {
            let width = if head == "x" { 64 } else { 32 };
            Some(reg(&lower, format!("x{idx}"), RegClass::Gp, width, false))
        }
        "b" | "h" | "s" | "d" | "q" if idx <= 31 && rest == digits => {
            let width = match head {
                "b" => 8,
                "h" => 16,
                "s" => 32,
                "d" => 64,
                _ => 128,
            };
            Some(reg(&lower, format!("v{idx}"), RegClass::Fp, width, false))
        }
        "v" if idx <= 31 => {
            // Optional arrangement suffix: v0.2d, v0.8b, ...
            let width = match rest.split_once('.') {
                Some((_, arr)) => match arr {
                    "8b" | "4h" | "2s" | "1d" => 64,
                    _ => 128,
                },
                None => 128,
            };
            Some(reg(&lower, format!("v{idx}"), RegClass::Vector, width, false))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x86_gp_aliases_share_canonical() {
        for name in ["rax", "eax", "ax", "al", "ah"] {
            assert_eq!(canonicalize(name, Isa::X86).unwrap().canonical, "rax");
        }
        assert_eq!(canonicalize("r8d", Isa::X86).unwrap().canonical, "r8");
        assert_eq!(canonicalize("r8d", Isa::X86).unwrap().width, 32);
        assert_eq!(canonicalize("sil", Isa::X86).unwrap().canonical, "rsi");
    }

    #[test]
    fn x86_vector_aliases_share_canonical() {
        for name in ["xmm3", "ymm3", "zmm3"] {
            assert_eq!(canonicalize(name, Isa::X86).unwrap().canonical, "xmm3");
        }
        assert_eq!(canonicalize("ymm3", Isa::X86).unwrap().width, 256);
    }

    #[test]
    fn aarch64_views_share_canonical() {
        for name in ["b31", "h31", "s31", "d31", "q31", "v31", "v31.2d"] {
            assert_eq!(canonicalize(name, Isa::Aarch64).unwrap().canonical, "v31");
        }
        assert_eq!(canonicalize("w15", Isa::Aarch64).unwrap().canonical, "x15");
        assert_eq!(canonicalize("d31", Isa::Aarch64).unwrap().width, 64);
        assert_eq!(canonicalize("v0.8b", Isa::Aarch64).unwrap().width, 64);
    }

    #[test]
    fn zero_register_is_marked() {
        assert!(canonicalize("xzr", Isa::Aarch64).unwrap().zero);
        assert!(canonicalize("wzr", Isa::Aarch64).unwrap().zero);
        assert!(!canonicalize("x0", Isa::Aarch64).unwrap().zero);
    }

    #[test]
    fn non_registers_are_rejected() {
        assert!(canonicalize("x31", Isa::Aarch64).is_none());
        assert!(canonicalize("foo", Isa::X86).is_none());
        assert!(canonicalize(".l20", Isa::Aarch64).is_none());
        assert!(canonicalize("x15abc", Isa::Aarch64).is_none());
    }
}
