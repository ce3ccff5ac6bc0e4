#![allow(dead_code)]

use pktgeom::{max_address, prefix_to_range, AddressRange, Packet, Rule, RuleSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn range(rng: &mut impl Rng, bits: u32) -> AddressRange {
    let max = max_address(bits);
    match rng.gen_range(0..4) {
        0 => {
            let len = rng.gen_range(0..=bits);
            prefix_to_range(rng.gen_range(0..=max), len, bits).unwrap()
        }
        1 => {
            let lo = rng.gen_range(0..=max);
            AddressRange::new(lo, lo)
        }
        _ => {
            let (a, b) = (rng.gen_range(0..=max), rng.gen_range(0..=max));
            AddressRange::new(a.min(b), a.max(b))
        }
    }
}

/// Mixed prefixes, points and arbitrary ranges; some rules duplicated
/// outright so equal rectangles show up.
pub fn mixed_rules(rng: &mut impl Rng, n: usize, bits: u32, levels: u64) -> RuleSet {
    let actions = ["permit", "deny"];
    let mut rules: Vec<Rule> = Vec::with_capacity(n);
    for id in 0..n as u32 {
        let (src, dst) = if id > 0 && rng.gen_bool(0.1) {
            let other = &rules[rng.gen_range(0..rules.len())];
            (other.src, other.dst)
        } else {
            (range(rng, bits), range(rng, bits))
        };
        let p = rng.gen_range(0..levels.max(1));
        rules.push(Rule::new(id, p, src, dst, *actions.choose(rng).unwrap()));
    }
    RuleSet::checked(bits, rules).unwrap()
}

/// Prefix rectangles, laminar on both axes.
pub fn cidr_rules(rng: &mut impl Rng, n: usize, bits: u32, levels: u64) -> RuleSet {
    let max = max_address(bits);
    let rules = (0..n as u32)
        .map(|id| {
            let mut prefix = || {
                let len = rng.gen_range(bits / 4..=bits);
                prefix_to_range(rng.gen_range(0..=max), len, bits).unwrap()
            };
            let (src, dst) = (prefix(), prefix());
            Rule::new(id, rng.gen_range(0..levels.max(1)), src, dst, "permit")
        })
        .collect();
    RuleSet::checked(bits, rules).unwrap()
}

/// Every rule boundary and its neighbours on each axis, crossed.
pub fn boundary_grid(rs: &RuleSet) -> Vec<Packet> {
    let max = rs.max_address();
    let axis = |pick: fn(&Rule) -> AddressRange| {
        let mut v: Vec<u64> = rs
            .rules
            .iter()
            .flat_map(|r| {
                let e = pick(r);
                [e.lo.checked_sub(1), Some(e.lo), e.lo.checked_add(1), e.hi.checked_sub(1), Some(e.hi), e.hi.checked_add(1)]
            })
            .flatten()
            .filter(|&c| c <= max)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let xs = axis(|r| r.src);
    let ys = axis(|r| r.dst);
    xs.iter().flat_map(|&x| ys.iter().map(move |&y| Packet::new(x, y))).collect()
}
