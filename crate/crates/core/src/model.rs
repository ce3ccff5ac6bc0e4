//! Rules, address ranges and rule-set validation.
//!
//! Rules are axis-aligned rectangles: the x-axis is the source address and the
//! y-axis is the destination address. All ranges are closed, so a packet
//! matches a rule iff `lo <= addr <= hi` on both axes.

use std::fmt;

use thiserror::Error;

pub type Address = u64;
pub type Priority = u64;
pub type RuleId = u32;

/// Largest supported `universe_bits`.
pub const MAX_UNIVERSE_BITS: u32 = 64;

/// Default universe width (IPv4).
pub const DEFAULT_UNIVERSE_BITS: u32 = 32;

/// Largest address in a universe of `2^bits` values.
pub fn max_address(bits: u32) -> Address {
    debug_assert!((1..=MAX_UNIVERSE_BITS).contains(&bits));
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("universe_bits {0} outside 1..=64")]
    UniverseBits(u32),
    #[error("prefix length {len} exceeds universe_bits {bits}")]
    PrefixLength { len: u32, bits: u32 },
    #[error("address {addr:#x} outside a {bits}-bit universe")]
    AddressOutOfRange { addr: Address, bits: u32 },
    #[error("rule set is invalid: {0}")]
    Invalid(ValidationReport),
}

/// A closed range of addresses `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AddressRange {
    pub lo: Address,
    pub hi: Address,
}

impl AddressRange {
    pub const fn new(lo: Address, hi: Address) -> Self {
        Self { lo, hi }
    }

    pub const fn point(a: Address) -> Self {
        Self { lo: a, hi: a }
    }

    /// The whole universe `[0, 2^bits - 1]`.
    pub fn universe(bits: u32) -> Self {
        Self::new(0, max_address(bits))
    }

    #[inline]
    pub fn contains(&self, a: Address) -> bool {
        self.lo <= a && a <= self.hi
    }

    pub fn contains_range(&self, other: &AddressRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &AddressRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersection(&self, other: &AddressRange) -> Option<AddressRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(AddressRange { lo, hi })
    }

    /// Number of addresses; `u128` because the full 64-bit universe has `2^64`.
    pub fn len(&self) -> u128 {
        (self.hi as u128) + 1 - self.lo as u128
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

impl fmt::Display for AddressRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A prioritized rectangle `src x dst` with an opaque action token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub id: RuleId,
    pub priority: Priority,
    pub src: AddressRange,
    pub dst: AddressRange,
    pub action: String,
}

impl Rule {
    pub fn new(
        id: RuleId,
        priority: Priority,
        src: AddressRange,
        dst: AddressRange,
        action: impl Into<String>,
    ) -> Self {
        Self {
            id,
            priority,
            src,
            dst,
            action: action.into(),
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.src, self.dst)
    }

    #[inline]
    pub fn matches(&self, pkt: Packet) -> bool {
        self.src.contains(pkt.src) && self.dst.contains(pkt.dst)
    }
}

/// A packet header reduced to its two address fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Packet {
    pub src: Address,
    pub dst: Address,
}

impl Packet {
    pub const fn new(src: Address, dst: Address) -> Self {
        Self { src, dst }
    }
}

/// A closed axis-aligned rectangle: `x` is the source axis, `y` the
/// destination axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: AddressRange,
    pub y: AddressRange,
}

impl Rect {
    pub const fn new(x: AddressRange, y: AddressRange) -> Self {
        Self { x, y }
    }

    pub fn contains(&self, pkt: Packet) -> bool {
        self.x.contains(pkt.src) && self.y.contains(pkt.dst)
    }
}

/// Which address field a range belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Src,
    Dst,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Src => "src",
            Field::Dst => "dst",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UniverseBits(u32),
    InvertedRange { index: usize, field: Field },
    ExceedsUniverse { index: usize, field: Field },
    DuplicateId { index: usize, id: RuleId },
    /// Ids must be exactly `0..n` in list order.
    IdNotDense { index: usize, id: RuleId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UniverseBits(b) => write!(f, "universe_bits {b} outside 1..=64"),
            Violation::InvertedRange { index, field } => {
                write!(f, "rule #{index}: inverted range in {field}")
            }
            Violation::ExceedsUniverse { index, field } => {
                write!(f, "rule #{index}: {field} range exceeds universe")
            }
            Violation::DuplicateId { index, id } => write!(f, "rule #{index}: duplicate id {id}"),
            Violation::IdNotDense { index, id } => {
                write!(f, "rule #{index}: id {id} is not its position")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub universe_bits: u32,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(universe_bits: u32, rules: Vec<Rule>) -> Self {
        Self {
            universe_bits,
            rules,
        }
    }

    /// Builds a rule set and rejects it unless `validate` comes back clean.
    pub fn checked(universe_bits: u32, rules: Vec<Rule>) -> Result<Self, ModelError> {
        let rs = Self::new(universe_bits, rules);
        rs.ensure_valid()?;
        Ok(rs)
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn max_address(&self) -> Address {
        max_address(self.universe_bits)
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id as usize]
    }

    pub fn packet_in_universe(&self, pkt: Packet) -> bool {
        let max = self.max_address();
        pkt.src <= max && pkt.dst <= max
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let bits_ok = (1..=MAX_UNIVERSE_BITS).contains(&self.universe_bits);
        if !bits_ok {
            violations.push(Violation::UniverseBits(self.universe_bits));
        }
        let max = if bits_ok { max_address(self.universe_bits) } else { u64::MAX };
        let mut seen = std::collections::HashSet::with_capacity(self.rules.len());
        for (index, rule) in self.rules.iter().enumerate() {
            for (field, range) in [(Field::Src, rule.src), (Field::Dst, rule.dst)] {
                if range.hi < range.lo {
                    violations.push(Violation::InvertedRange { index, field });
                }
                if range.lo > max || range.hi > max {
                    violations.push(Violation::ExceedsUniverse { index, field });
                }
            }
            if !seen.insert(rule.id) {
                violations.push(Violation::DuplicateId { index, id: rule.id });
            } else if rule.id as usize != index {
                violations.push(Violation::IdNotDense { index, id: rule.id });
            }
        }
        ValidationReport { violations }
    }
}

/// Converts an address and mask length into the range it denotes: the low
/// `bits - prefix_len` bits are cleared for `lo` and set for `hi`.
pub fn prefix_to_range(
    addr: Address,
    prefix_len: u32,
    universe_bits: u32,
) -> Result<AddressRange, ModelError> {
    if !(1..=MAX_UNIVERSE_BITS).contains(&universe_bits) {
        return Err(ModelError::UniverseBits(universe_bits));
    }
    if prefix_len > universe_bits {
        return Err(ModelError::PrefixLength {
            len: prefix_len,
            bits: universe_bits,
        });
    }
    let max = max_address(universe_bits);
    if addr > max {
        return Err(ModelError::AddressOutOfRange {
            addr,
            bits: universe_bits,
        });
    }
    let host_bits = universe_bits - prefix_len;
    let host_mask = if host_bits >= 64 {
        u64::MAX
    } else {
        (1u64 << host_bits) - 1
    };
    Ok(AddressRange::new(addr & !host_mask, (addr | host_mask) & max))
}

/// True iff every pair of ranges is nested or disjoint.
pub fn is_laminar(ranges: &[AddressRange]) -> bool {
    let mut sorted: Vec<AddressRange> = ranges.to_vec();
    // Outer ranges before the ranges they contain.
    sorted.sort_unstable_by(|a, b| a.lo.cmp(&b.lo).then(b.hi.cmp(&a.hi)));
    let mut stack: Vec<AddressRange> = Vec::new();
    for r in sorted {
        while let Some(top) = stack.last() {
            if top.hi < r.lo {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(top) = stack.last() {
            if r.hi > top.hi {
                return false;
            }
        }
        stack.push(r);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_examples() {
        assert_eq!(prefix_to_range(160, 4, 8).unwrap(), AddressRange::new(160, 175));
        assert_eq!(prefix_to_range(0, 0, 8).unwrap(), AddressRange::new(0, 255));
        assert_eq!(
            prefix_to_range(0xC0A8_0000, 16, 32).unwrap(),
            AddressRange::new(0xC0A8_0000, 0xC0A8_FFFF)
        );
        assert_eq!(prefix_to_range(0, 0, 64).unwrap(), AddressRange::new(0, u64::MAX));
        assert_eq!(prefix_to_range(7, 64, 64).unwrap(), AddressRange::point(7));
    }

    #[test]
    fn prefix_errors() {
        assert!(matches!(
            prefix_to_range(0, 9, 8),
            Err(ModelError::PrefixLength { len: 9, bits: 8 })
        ));
        assert!(matches!(
            prefix_to_range(256, 4, 8),
            Err(ModelError::AddressOutOfRange { .. })
        ));
        assert!(prefix_to_range(0, 0, 0).is_err());
    }

    #[test]
    fn validate_examples() {
        let ok = RuleSet::new(8, vec![]);
        assert!(ok.validate().is_empty());

        let inverted = RuleSet::new(
            8,
            vec![Rule::new(0, 1, AddressRange::new(5, 3), AddressRange::new(0, 1), "a")],
        );
        assert_eq!(
            inverted.validate().violations,
            vec![Violation::InvertedRange { index: 0, field: Field::Src }]
        );

        let too_big = RuleSet::new(
            8,
            vec![Rule::new(0, 1, AddressRange::new(0, 1), AddressRange::new(0, 256), "a")],
        );
        assert_eq!(
            too_big.validate().violations,
            vec![Violation::ExceedsUniverse { index: 0, field: Field::Dst }]
        );

        let r = |id| Rule::new(id, 1, AddressRange::new(0, 1), AddressRange::new(0, 1), "a");
        let dup = RuleSet::new(8, vec![r(0), r(0)]);
        assert_eq!(
            dup.validate().violations,
            vec![Violation::DuplicateId { index: 1, id: 0 }]
        );
        let gap = RuleSet::new(8, vec![r(0), r(2)]);
        assert_eq!(
            gap.validate().violations,
            vec![Violation::IdNotDense { index: 1, id: 2 }]
        );
        assert!(RuleSet::new(65, vec![]).validate().violations.contains(&Violation::UniverseBits(65)));
    }

    #[test]
    fn laminar_examples() {
        let r = AddressRange::new;
        assert!(is_laminar(&[r(0, 7), r(0, 3), r(4, 7)]));
        assert!(!is_laminar(&[r(0, 5), r(3, 9)]));
        assert!(is_laminar(&[]));
        assert!(is_laminar(&[r(2, 2), r(2, 2), r(0, 9)]));
        assert!(!is_laminar(&[r(0, 9), r(1, 4), r(4, 6)]));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn prefix_range_size(bits in 1u32..=64, len_frac in 0.0f64..=1.0, addr: u64) {
                let len = ((bits as f64) * len_frac).floor() as u32;
                let addr = addr & max_address(bits);
                let r = prefix_to_range(addr, len, bits).unwrap();
                prop_assert!(r.lo <= r.hi);
                prop_assert_eq!(r.len(), 1u128 << (bits - len));
                prop_assert!(r.contains(addr));
            }

            #[test]
            fn cidr_families_are_laminar(
                bits in 1u32..=32,
                raw in proptest::collection::vec((any::<u64>(), 0u32..=32), 0..40),
            ) {
                let ranges: Vec<_> = raw
                    .iter()
                    .map(|&(a, l)| prefix_to_range(a & max_address(bits), l.min(bits), bits).unwrap())
                    .collect();
                prop_assert!(is_laminar(&ranges));
            }
        }
    }
}
