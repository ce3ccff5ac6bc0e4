//! Brute-force reference answers.
//!
//! Nothing here calls into the classifier, the stores, the envelope code or
//! the conflict detector, and containment is re-derived from raw bounds rather
//! than taken from [`crate::model`] helpers.

use std::collections::BTreeSet;

use crate::envelope::{HSegment, PathEdge, PqOp, SegId};
use crate::model::{Address, Packet, Priority, Rule, RuleId, RuleSet};
use crate::stripes::ConflictWitness;

fn inside(r: &Rule, x: Address, y: Address) -> bool {
    r.src.lo <= x && x <= r.src.hi && r.dst.lo <= y && y <= r.dst.hi
}

/// All rules containing the packet, ascending id.
pub fn naive_list(rs: &RuleSet, pkt: Packet) -> Vec<RuleId> {
    let mut ids: Vec<RuleId> = rs
        .rules
        .iter()
        .filter(|r| inside(r, pkt.src, pkt.dst))
        .map(|r| r.id)
        .collect();
    ids.sort_unstable();
    ids
}

/// The winner under (priority, lower id first) and every rule tied with it,
/// ascending id.
pub fn naive_classify(rs: &RuleSet, pkt: Packet) -> Option<(RuleId, Vec<RuleId>)> {
    let top = top_set(&rs.rules, pkt.src, pkt.dst)?;
    Some((top.1[0], top.1))
}

fn top_set(rules: &[Rule], x: Address, y: Address) -> Option<(Priority, Vec<RuleId>)> {
    let mut best: Option<Priority> = None;
    let mut tied = Vec::new();
    for r in rules.iter().filter(|r| inside(r, x, y)) {
        match best {
            Some(p) if p > r.priority => {}
            Some(p) if p == r.priority => tied.push(r.id),
            _ => {
                best = Some(r.priority);
                tied.clear();
                tied.push(r.id);
            }
        }
    }
    tied.sort_unstable();
    best.map(|p| (p, tied))
}

fn witness_at(rules: &[Rule], x: Address, y: Address) -> Option<ConflictWitness> {
    let (priority, tied) = top_set(rules, x, y)?;
    (tied.len() >= 2).then(|| ConflictWitness {
        x,
        y,
        rule_a: tied[0],
        rule_b: tied[1],
        priority,
    })
}

/// Whether `w` names two distinct rules sharing the maximum priority at its
/// point.
pub fn witness_is_valid(rs: &RuleSet, w: &ConflictWitness) -> bool {
    match top_set(&rs.rules, w.x, w.y) {
        Some((p, tied)) => {
            p == w.priority
                && w.rule_a != w.rule_b
                && tied.contains(&w.rule_a)
                && tied.contains(&w.rule_b)
        }
        None => false,
    }
}

/// Candidate coordinates on one axis: every bound, and every bound plus one,
/// inside the universe.
fn candidates(bounds: impl Iterator<Item = (Address, Address)>, max: Address) -> Vec<Address> {
    let mut out = BTreeSet::new();
    for (lo, hi) in bounds {
        out.insert(lo);
        out.insert(hi);
        if lo < max {
            out.insert(lo + 1);
        }
        if hi < max {
            out.insert(hi + 1);
        }
    }
    out.into_iter().collect()
}

fn candidate_grid(rs: &RuleSet) -> (Vec<Address>, Vec<Address>) {
    let max = rs.max_address();
    let xs = candidates(rs.rules.iter().map(|r| (r.src.lo, r.src.hi)), max);
    let ys = candidates(rs.rules.iter().map(|r| (r.dst.lo, r.dst.hi)), max);
    (xs, ys)
}

/// Operations performed by [`naive_conflict_counted`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NaiveWork {
    pub points: u64,
    /// Rule containment tests, column filtering included.
    pub checks: u64,
}

/// Number of candidate points [`naive_conflict`] evaluates on a conflict-free
/// input.
pub fn naive_conflict_points(rs: &RuleSet) -> u128 {
    let (xs, ys) = candidate_grid(rs);
    xs.len() as u128 * ys.len() as u128
}

/// First candidate point (x-major) without a unique top rule.
pub fn naive_conflict(rs: &RuleSet) -> Option<ConflictWitness> {
    naive_conflict_counted(rs).0
}

/// [`naive_conflict`] plus the work it did.
pub fn naive_conflict_counted(rs: &RuleSet) -> (Option<ConflictWitness>, NaiveWork) {
    let (xs, ys) = candidate_grid(rs);
    let mut work = NaiveWork::default();
    for &x in &xs {
        let column: Vec<Rule> = rs
            .rules
            .iter()
            .filter(|r| r.src.lo <= x && x <= r.src.hi)
            .cloned()
            .collect();
        work.checks += rs.rules.len() as u64;
        for &y in &ys {
            work.points += 1;
            work.checks += column.len() as u64;
            if let Some(w) = witness_at(&column, x, y) {
                return (Some(w), work);
            }
        }
    }
    (None, work)
}

/// Every point of the universe, for universes of at most 2^16 points.
pub fn exhaustive_conflict(rs: &RuleSet) -> Option<ConflictWitness> {
    assert!(rs.universe_bits <= 8, "exhaustive scan needs a tiny universe");
    let max = rs.max_address();
    (0..=max).find_map(|x| (0..=max).find_map(|y| witness_at(&rs.rules, x, y)))
}

/// Per gap, the covering segment of minimum (weight, id).
pub fn naive_envelope(segments: &[HSegment], m: usize) -> Vec<Option<SegId>> {
    (0..m.saturating_sub(1))
        .map(|g| {
            segments
                .iter()
                .filter(|s| s.x_lo <= g && g < s.x_hi)
                .min_by_key(|s| (s.weight, s.id))
                .map(|s| s.id)
        })
        .collect()
}

/// Per gap, every covering segment of minimum weight, ascending id.
pub fn naive_envelope_ties(segments: &[HSegment], m: usize) -> Vec<Vec<SegId>> {
    (0..m.saturating_sub(1))
        .map(|g| {
            let covering: Vec<&HSegment> = segments.iter().filter(|s| s.x_lo <= g && g < s.x_hi).collect();
            let best = covering.iter().map(|s| s.weight).min();
            let mut ids: Vec<SegId> = covering
                .iter()
                .filter(|s| Some(s.weight) == best)
                .map(|s| s.id)
                .collect();
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Largest key `<= q`.
pub fn naive_predecessor(keys: &[Address], q: Address) -> Option<Address> {
    keys.iter().copied().filter(|&k| k <= q).max()
}

/// Replays the operations on a plain multiset. `None` if a delete removes an
/// absent value.
pub fn naive_min_queries(ops: &[PqOp]) -> Option<Vec<Option<u64>>> {
    let mut bag: Vec<u64> = Vec::new();
    let mut out = Vec::new();
    for op in ops {
        match *op {
            PqOp::Insert(v) => bag.push(v),
            PqOp::Delete(v) => {
                let at = bag.iter().position(|&b| b == v)?;
                bag.swap_remove(at);
            }
            PqOp::QueryMin => out.push(bag.iter().copied().min()),
        }
    }
    Some(out)
}

/// Per path edge `(i, i+1)`, the index of the cheapest spanning edge
/// (smallest index on equal weight).
pub fn naive_path_replacements(path_n: usize, edges: &[PathEdge]) -> Vec<Option<usize>> {
    (0..path_n.saturating_sub(1))
        .map(|i| {
            edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.u <= i && i < e.v)
                .min_by_key(|(j, e)| (e.weight, *j))
                .map(|(j, _)| j)
        })
        .collect()
}
