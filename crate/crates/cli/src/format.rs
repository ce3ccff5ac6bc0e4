//! Rule files and packet traces.
//!
//! ```text
//! universe_bits 32
//! # comment
//! priority 2 src 10.0.0.0/8 dst 0-255 action deny
//! ```
//!
//! Address literals are decimal, `0x` hex, or dotted quads in a 32-bit
//! universe. A field is either `addr/len` or `lo-hi`. Rule ids follow file
//! order starting at 0.

use std::fmt::Write as _;

use pktgeom::model::DEFAULT_UNIVERSE_BITS;
use pktgeom::{max_address, prefix_to_range, Address, AddressRange, Packet, Rule, RuleSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Strips a trailing `#` comment and surrounding whitespace.
fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse_address(tok: &str, bits: u32) -> Result<Address, String> {
    let value = if let Some(hex) = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).map_err(|e| format!("bad hex address {tok:?}: {e}"))?
    } else if tok.contains('.') {
        if bits != 32 {
            return Err(format!("dotted address {tok:?} needs universe_bits 32"));
        }
        let octets: Vec<&str> = tok.split('.').collect();
        if octets.len() != 4 {
            return Err(format!("bad dotted address {tok:?}"));
        }
        octets.iter().try_fold(0u64, |acc, o| {
            o.parse::<u8>()
                .map(|b| acc << 8 | u64::from(b))
                .map_err(|_| format!("bad octet {o:?} in {tok:?}"))
        })?
    } else {
        tok.parse::<u64>().map_err(|e| format!("bad address {tok:?}: {e}"))?
    };
    if value > max_address(bits) {
        return Err(format!("address {tok} outside the {bits}-bit universe"));
    }
    Ok(value)
}

pub fn parse_field(tok: &str, bits: u32) -> Result<AddressRange, String> {
    if let Some((addr, len)) = tok.split_once('/') {
        let len: u32 = len.parse().map_err(|_| format!("bad prefix length in {tok:?}"))?;
        if len > bits {
            return Err(format!("prefix length /{len} exceeds universe_bits {bits}"));
        }
        let addr = parse_address(addr, bits)?;
        prefix_to_range(addr, len, bits).map_err(|e| e.to_string())
    } else if let Some((lo, hi)) = tok.split_once('-') {
        let (lo, hi) = (parse_address(lo, bits)?, parse_address(hi, bits)?);
        if lo > hi {
            return Err(format!("inverted range {tok:?}"));
        }
        Ok(AddressRange::new(lo, hi))
    } else {
        Err(format!("expected addr/len or lo-hi, got {tok:?}"))
    }
}

pub fn parse_rules(text: &str) -> Result<RuleSet, ParseError> {
    let mut bits: Option<u32> = None;
    let mut rules: Vec<Rule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = content(raw).split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["universe_bits", b] => {
                if bits.is_some() || !rules.is_empty() {
                    return Err(err(line, "universe_bits must come once, before any rule"));
                }
                let b: u32 = b.parse().map_err(|_| err(line, format!("bad universe_bits {b:?}")))?;
                if !(1..=64).contains(&b) {
                    return Err(err(line, format!("universe_bits {b} outside 1..=64")));
                }
                bits = Some(b);
            }
            ["priority", p, "src", src, "dst", dst, "action", action] => {
                let b = *bits.get_or_insert(DEFAULT_UNIVERSE_BITS);
                let p = p.parse().map_err(|_| err(line, format!("bad priority {p:?}")))?;
                let src = parse_field(src, b).map_err(|m| err(line, format!("src: {m}")))?;
                let dst = parse_field(dst, b).map_err(|m| err(line, format!("dst: {m}")))?;
                rules.push(Rule::new(rules.len() as u32, p, src, dst, *action));
            }
            _ => {
                return Err(err(
                    line,
                    "expected `priority <p> src <field> dst <field> action <token>`",
                ))
            }
        }
    }
    RuleSet::checked(bits.unwrap_or(DEFAULT_UNIVERSE_BITS), rules).map_err(|e| err(0, e.to_string()))
}

/// One `src dst` pair per line.
pub fn parse_packets(text: &str, bits: u32) -> Result<Vec<Packet>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let toks: Vec<&str> = content(raw).split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            [s, d] => {
                let s = parse_address(s, bits).map_err(|m| err(i + 1, m))?;
                let d = parse_address(d, bits).map_err(|m| err(i + 1, m))?;
                out.push(Packet::new(s, d));
            }
            _ => return Err(err(i + 1, "expected `<src> <dst>`")),
        }
    }
    Ok(out)
}

fn render_address(a: Address, bits: u32) -> String {
    if bits == 32 {
        let o = a.to_be_bytes();
        format!("{}.{}.{}.{}", o[4], o[5], o[6], o[7])
    } else {
        format!("{a:#x}")
    }
}

/// Prefix form when the range is an aligned prefix, `lo-hi` otherwise.
pub fn render_field(r: AddressRange, bits: u32) -> String {
    let span = r.hi - r.lo;
    let aligned = span.checked_add(1).map_or(r.lo == 0, |size| size.is_power_of_two() && r.lo.is_multiple_of(size));
    if aligned {
        let host_bits = 64 - span.leading_zeros();
        format!("{}/{}", render_address(r.lo, bits), bits - host_bits)
    } else {
        format!("{}-{}", r.lo, r.hi)
    }
}

pub fn render_rules(rs: &RuleSet) -> String {
    let mut out = format!("universe_bits {}\n", rs.universe_bits);
    for r in &rs.rules {
        let _ = writeln!(
            out,
            "priority {} src {} dst {} action {}",
            r.priority,
            render_field(r.src, rs.universe_bits),
            render_field(r.dst, rs.universe_bits),
            r.action
        );
    }
    out
}
