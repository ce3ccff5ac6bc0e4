//! Conflict detection among stripes inside one rectangular cell.
//!
//! Inside a cell every stripe spans the full width (horizontal), the full
//! height (vertical) or both (universal). Given the stripes sorted by priority
//! and the boundaries of each family sorted by coordinate, a conflict is found
//! in linear time:
//!
//! 1. Partition the y-axis by the best horizontal stripe per elementary gap
//!    and the x-axis by the best vertical stripe. Uncovered gaps count as
//!    priority minus infinity.
//! 2. Let `m_h`, `m_v` be the smallest priorities in the two partitions, `m_u`
//!    the best universal priority, and `p_h`, `p_v` the best priority at which
//!    a partition gap has two tied winners.
//! 3. A conflict exists iff one of
//!    * H/H: `p_h >= max(m_v, m_u)`, V/V symmetric,
//!    * U/U: two universal stripes at `m_u` and `m_u >= max(m_h, m_v)`,
//!    * U/H: `m_u` occurs in the horizontal partition and `m_u >= m_v`,
//!      U/V symmetric,
//!    * H/V: some priority `>= m_u` occurs in both partitions.
//!
//! Priorities are replaced by dense ranks, so the last test is a masked AND of
//! two bitmaps.

use thiserror::Error;

use crate::envelope::{envelope_in_order, EnvelopeCounters, HSegment};
use crate::model::{Address, AddressRange, Priority, Rect, RuleId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StripeError {
    #[error("stripe {index}: extent {extent} is not a proper subrange of the cell")]
    NotProper { index: usize, extent: AddressRange },
    #[error("stripe orderings are inconsistent with the stripes")]
    BadOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Spans the cell's full x-extent; `extent` is its y-range.
    Horizontal,
    /// Spans the cell's full y-extent; `extent` is its x-range.
    Vertical,
    /// Spans the whole cell; `extent` is ignored.
    Universal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stripe {
    pub rule: RuleId,
    pub orientation: Orientation,
    pub extent: AddressRange,
    pub priority: Priority,
}

impl Stripe {
    pub fn horizontal(rule: RuleId, y: AddressRange, priority: Priority) -> Self {
        Self {
            rule,
            orientation: Orientation::Horizontal,
            extent: y,
            priority,
        }
    }

    pub fn vertical(rule: RuleId, x: AddressRange, priority: Priority) -> Self {
        Self {
            rule,
            orientation: Orientation::Vertical,
            extent: x,
            priority,
        }
    }

    pub fn universal(rule: RuleId, priority: Priority) -> Self {
        Self {
            rule,
            orientation: Orientation::Universal,
            extent: AddressRange::new(0, 0),
            priority,
        }
    }

    /// Whether the stripe covers `(x, y)`, assuming the point lies in the cell.
    pub fn covers(&self, x: Address, y: Address) -> bool {
        match self.orientation {
            Orientation::Horizontal => self.extent.contains(y),
            Orientation::Vertical => self.extent.contains(x),
            Orientation::Universal => true,
        }
    }
}

/// Lower or upper end of a stripe's extent. Boundaries are ordered by
/// position, where the lower end sits at `lo` and the upper end at `hi + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

#[inline]
fn position(extent: &AddressRange, side: Side) -> u128 {
    match side {
        Side::Low => extent.lo as u128,
        Side::High => extent.hi as u128 + 1,
    }
}

/// A cell, its stripes, and the three orderings detection relies on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeBundle {
    pub cell: Rect,
    pub stripes: Vec<Stripe>,
    /// Stripe indices sorted by `(priority, rule)`.
    pub priority_order: Vec<u32>,
    /// Both ends of every horizontal stripe, sorted by position.
    pub h_order: Vec<(u32, Side)>,
    /// Both ends of every vertical stripe, sorted by position.
    pub v_order: Vec<(u32, Side)>,
}

impl StripeBundle {
    /// Checks the stripes against the cell and sorts the orderings.
    pub fn new(cell: Rect, stripes: Vec<Stripe>) -> Result<Self, StripeError> {
        for (index, s) in stripes.iter().enumerate() {
            let axis = match s.orientation {
                Orientation::Horizontal => cell.y,
                Orientation::Vertical => cell.x,
                Orientation::Universal => continue,
            };
            if s.extent.is_empty() || !axis.contains_range(&s.extent) || s.extent == axis {
                return Err(StripeError::NotProper {
                    index,
                    extent: s.extent,
                });
            }
        }
        let mut priority_order: Vec<u32> = (0..stripes.len() as u32).collect();
        priority_order.sort_by_key(|&i| (stripes[i as usize].priority, stripes[i as usize].rule));
        let ends = |o: Orientation| {
            let mut v: Vec<(u32, Side)> = stripes
                .iter()
                .enumerate()
                .filter(|(_, s)| s.orientation == o)
                .flat_map(|(i, _)| [(i as u32, Side::Low), (i as u32, Side::High)])
                .collect();
            v.sort_by_key(|&(i, side)| position(&stripes[i as usize].extent, side));
            v
        };
        let h_order = ends(Orientation::Horizontal);
        let v_order = ends(Orientation::Vertical);
        Ok(Self {
            cell,
            stripes,
            priority_order,
            h_order,
            v_order,
        })
    }

    /// Wraps already-sorted orderings without re-sorting.
    pub fn from_sorted(
        cell: Rect,
        stripes: Vec<Stripe>,
        priority_order: Vec<u32>,
        h_order: Vec<(u32, Side)>,
        v_order: Vec<(u32, Side)>,
    ) -> Self {
        let b = Self {
            cell,
            stripes,
            priority_order,
            h_order,
            v_order,
        };
        debug_assert_eq!(b.check_orders(), Ok(()));
        b
    }

    /// Verifies the orderings describe the stripes.
    pub fn check_orders(&self) -> Result<(), StripeError> {
        let n = self.stripes.len();
        let mut seen = vec![false; n];
        if self.priority_order.len() != n {
            return Err(StripeError::BadOrder);
        }
        for &i in &self.priority_order {
            let i = i as usize;
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(StripeError::BadOrder);
            }
        }
        let key = |&i: &u32| (self.stripes[i as usize].priority, self.stripes[i as usize].rule);
        if self.priority_order.windows(2).any(|w| key(&w[0]) > key(&w[1])) {
            return Err(StripeError::BadOrder);
        }
        for (order, o) in [
            (&self.h_order, Orientation::Horizontal),
            (&self.v_order, Orientation::Vertical),
        ] {
            let expected = self.stripes.iter().filter(|s| s.orientation == o).count() * 2;
            if order.len() != expected {
                return Err(StripeError::BadOrder);
            }
            let mut last = 0u128;
            for &(i, side) in order {
                let s = self.stripes.get(i as usize).ok_or(StripeError::BadOrder)?;
                if s.orientation != o {
                    return Err(StripeError::BadOrder);
                }
                let p = position(&s.extent, side);
                if p < last {
                    return Err(StripeError::BadOrder);
                }
                last = p;
            }
        }
        Ok(())
    }
}

/// A point with no unique maximum-priority rule, and two rules tied there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConflictWitness {
    pub x: Address,
    pub y: Address,
    pub rule_a: RuleId,
    pub rule_b: RuleId,
    pub priority: Priority,
}

impl ConflictWitness {
    fn new(x: Address, y: Address, a: RuleId, b: RuleId, priority: Priority) -> Self {
        Self {
            x,
            y,
            rule_a: a.min(b),
            rule_b: a.max(b),
            priority,
        }
    }
}

const NEG_INF: i64 = -1;

/// Best-stripe partition of one axis of the cell.
struct Partition {
    /// Raw coordinate at which each gap starts.
    starts: Vec<u128>,
    /// Winning stripe per gap (ascending-rule tie-break).
    winner: Vec<Option<usize>>,
    min_rank: i64,
    min_gap: usize,
    /// `(rank, gap, stripe, other stripe)` of the best tied gap.
    ambiguity: Option<(i64, usize, usize, usize)>,
    present: Vec<u64>,
    gap_of_rank: Vec<u32>,
}

impl Partition {
    fn has_rank(&self, r: i64) -> bool {
        r >= 0 && (self.present[r as usize / 64] >> (r as usize % 64)) & 1 == 1
    }
}

fn partition_axis(
    bundle: &StripeBundle,
    axis: AddressRange,
    orientation: Orientation,
    order: &[(u32, Side)],
    ranks: &[u32],
    rank_count: usize,
) -> Partition {
    let stripes = &bundle.stripes;

    // Distinct positions from the sorted boundary list, bracketed by the cell.
    let mut starts: Vec<u128> = Vec::with_capacity(order.len() + 2);
    starts.push(axis.lo as u128);
    let mut seg_of_stripe = vec![usize::MAX; stripes.len()];
    let mut segments: Vec<HSegment> = Vec::with_capacity(order.len() / 2);
    let mut bounds: Vec<[usize; 2]> = Vec::with_capacity(order.len() / 2);
    for &(i, side) in order {
        let i = i as usize;
        let p = position(&stripes[i].extent, side);
        if *starts.last().unwrap() != p {
            starts.push(p);
        }
        let at = starts.len() - 1;
        if seg_of_stripe[i] == usize::MAX {
            seg_of_stripe[i] = segments.len();
            segments.push(HSegment::new(i as u32, 0, 0, 0));
            bounds.push([0, 0]);
        }
        bounds[seg_of_stripe[i]][side as usize] = at;
    }
    let end = axis.hi as u128 + 1;
    if *starts.last().unwrap() != end {
        starts.push(end);
    }
    let top = rank_count as u64;
    for (seg, b) in segments.iter_mut().zip(&bounds) {
        seg.x_lo = b[0];
        seg.x_hi = b[1];
        // Highest priority first: the envelope minimises weight.
        seg.weight = top - ranks[seg.id as usize] as u64;
    }

    // Envelope orders straight from the priority order: priorities descending,
    // rule ascending (first run) or descending (second run) among equals.
    let family: Vec<usize> = bundle
        .priority_order
        .iter()
        .map(|&i| i as usize)
        .filter(|&i| stripes[i].orientation == orientation)
        .map(|i| seg_of_stripe[i])
        .collect();
    let mut asc_order = Vec::with_capacity(family.len());
    let mut end_of_group = family.len();
    while end_of_group > 0 {
        let w = segments[family[end_of_group - 1]].weight;
        let mut start = end_of_group - 1;
        while start > 0 && segments[family[start - 1]].weight == w {
            start -= 1;
        }
        asc_order.extend_from_slice(&family[start..end_of_group]);
        end_of_group = start;
    }
    let m = starts.len();
    let mut counters = EnvelopeCounters::default();
    let asc = envelope_in_order(m, &segments, asc_order, &mut counters);
    let desc = envelope_in_order(m, &segments, family.iter().rev().copied(), &mut counters);

    let words = rank_count.div_ceil(64).max(1);
    let mut part = Partition {
        winner: Vec::with_capacity(m - 1),
        starts,
        min_rank: i64::MAX,
        min_gap: 0,
        ambiguity: None,
        present: vec![0; words],
        gap_of_rank: vec![u32::MAX; rank_count],
    };
    for (gap, (a, d)) in asc.iter().zip(&desc).enumerate() {
        let stripe = a.map(|s| segments[s].id as usize);
        let rank = stripe.map_or(NEG_INF, |s| ranks[s] as i64);
        if rank < part.min_rank {
            part.min_rank = rank;
            part.min_gap = gap;
        }
        if let (Some(a), Some(d)) = (a, d) {
            if a != d && part.ambiguity.is_none_or(|(r, ..)| rank > r) {
                part.ambiguity = Some((rank, gap, segments[*a].id as usize, segments[*d].id as usize));
            }
        }
        if rank >= 0 {
            let r = rank as usize;
            part.present[r / 64] |= 1 << (r % 64);
            if part.gap_of_rank[r] == u32::MAX {
                part.gap_of_rank[r] = gap as u32;
            }
        }
        part.winner.push(stripe);
    }
    part
}

/// Finds a point of the cell where the best stripe is not unique.
pub fn detect_stripe_conflict(bundle: &StripeBundle) -> Option<ConflictWitness> {
    let stripes = &bundle.stripes;
    if stripes.is_empty() {
        return None;
    }

    // Dense priority ranks.
    let mut ranks = vec![0u32; stripes.len()];
    let mut rank_priority: Vec<Priority> = Vec::new();
    for &i in &bundle.priority_order {
        let p = stripes[i as usize].priority;
        if rank_priority.last() != Some(&p) {
            rank_priority.push(p);
        }
        ranks[i as usize] = (rank_priority.len() - 1) as u32;
    }
    let rank_count = rank_priority.len();

    let h = partition_axis(
        bundle,
        bundle.cell.y,
        Orientation::Horizontal,
        &bundle.h_order,
        &ranks,
        rank_count,
    );
    let v = partition_axis(
        bundle,
        bundle.cell.x,
        Orientation::Vertical,
        &bundle.v_order,
        &ranks,
        rank_count,
    );

    // Best universal stripes, smallest rules first.
    let mut m_u = NEG_INF;
    let mut top_universal: Vec<usize> = Vec::with_capacity(2);
    for &i in bundle.priority_order.iter().rev() {
        let i = i as usize;
        if stripes[i].orientation != Orientation::Universal {
            continue;
        }
        let r = ranks[i] as i64;
        if r > m_u {
            m_u = r;
            top_universal.clear();
        }
        if r == m_u {
            top_universal.push(i);
        }
    }
    top_universal.reverse();

    let x_at = |gap: usize| v.starts[gap] as Address;
    let y_at = |gap: usize| h.starts[gap] as Address;
    let prio = |r: i64| rank_priority[r as usize];
    let witness = |gx: usize, gy: usize, a: usize, b: usize, r: i64| {
        ConflictWitness::new(x_at(gx), y_at(gy), stripes[a].rule, stripes[b].rule, prio(r))
    };

    if let Some((p_h, gap, a, b)) = h.ambiguity {
        if p_h >= v.min_rank.max(m_u) {
            return Some(witness(v.min_gap, gap, a, b, p_h));
        }
    }
    if let Some((p_v, gap, a, b)) = v.ambiguity {
        if p_v >= h.min_rank.max(m_u) {
            return Some(witness(gap, h.min_gap, a, b, p_v));
        }
    }
    if top_universal.len() >= 2 && m_u >= h.min_rank.max(v.min_rank) {
        return Some(witness(v.min_gap, h.min_gap, top_universal[0], top_universal[1], m_u));
    }
    if m_u >= 0 {
        let u = top_universal[0];
        if h.has_rank(m_u) && m_u >= v.min_rank {
            let gy = h.gap_of_rank[m_u as usize] as usize;
            let other = h.winner[gy].expect("gap of a present rank has a winner");
            return Some(witness(v.min_gap, gy, u, other, m_u));
        }
        if v.has_rank(m_u) && m_u >= h.min_rank {
            let gx = v.gap_of_rank[m_u as usize] as usize;
            let other = v.winner[gx].expect("gap of a present rank has a winner");
            return Some(witness(gx, h.min_gap, u, other, m_u));
        }
    }
    // Highest common rank at or above m_u.
    let floor = m_u.max(0) as usize;
    for word in (floor / 64..h.present.len()).rev() {
        let mut both = h.present[word] & v.present[word];
        if word == floor / 64 {
            both &= !0u64 << (floor % 64);
        }
        if both != 0 {
            let r = word * 64 + 63 - both.leading_zeros() as usize;
            let gy = h.gap_of_rank[r] as usize;
            let gx = v.gap_of_rank[r] as usize;
            let a = h.winner[gy].expect("present rank");
            let b = v.winner[gx].expect("present rank");
            return Some(witness(gx, gy, a, b, r as i64));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(x: (u64, u64), y: (u64, u64)) -> Rect {
        Rect::new(AddressRange::new(x.0, x.1), AddressRange::new(y.0, y.1))
    }

    /// Every integer point of the cell.
    fn grid_conflict(b: &StripeBundle) -> bool {
        (b.cell.x.lo..=b.cell.x.hi).any(|x| {
            (b.cell.y.lo..=b.cell.y.hi).any(|y| {
                let best = b.stripes.iter().filter(|s| s.covers(x, y)).map(|s| s.priority).max();
                best.is_some_and(|p| {
                    b.stripes.iter().filter(|s| s.covers(x, y) && s.priority == p).count() >= 2
                })
            })
        })
    }

    fn check_witness(b: &StripeBundle, w: &ConflictWitness) {
        assert!(b.cell.contains(crate::model::Packet::new(w.x, w.y)));
        assert_ne!(w.rule_a, w.rule_b);
        let covering: Vec<&Stripe> = b.stripes.iter().filter(|s| s.covers(w.x, w.y)).collect();
        let best = covering.iter().map(|s| s.priority).max().unwrap();
        assert_eq!(best, w.priority);
        for r in [w.rule_a, w.rule_b] {
            assert!(covering.iter().any(|s| s.rule == r && s.priority == best));
        }
    }

    #[test]
    fn horizontal_pair() {
        let c = cell((0, 9), (0, 9));
        let b = StripeBundle::new(
            c,
            vec![
                Stripe::horizontal(0, AddressRange::new(0, 4), 5),
                Stripe::horizontal(1, AddressRange::new(3, 8), 5),
            ],
        )
        .unwrap();
        let w = detect_stripe_conflict(&b).unwrap();
        check_witness(&b, &w);
        assert!((3..=4).contains(&w.y));
        assert_eq!((w.rule_a, w.rule_b, w.priority), (0, 1, 5));
    }

    #[test]
    fn universal_masks_horizontal_pair() {
        let c = cell((0, 9), (0, 9));
        let b = StripeBundle::new(
            c,
            vec![
                Stripe::horizontal(0, AddressRange::new(0, 4), 5),
                Stripe::horizontal(1, AddressRange::new(3, 8), 5),
                Stripe::universal(2, 9),
            ],
        )
        .unwrap();
        assert_eq!(detect_stripe_conflict(&b), None);
        assert!(!grid_conflict(&b));
    }

    #[test]
    fn horizontal_vertical_tie() {
        let c = cell((0, 9), (0, 9));
        let b = StripeBundle::new(
            c,
            vec![
                Stripe::horizontal(0, AddressRange::new(0, 3), 7),
                Stripe::vertical(1, AddressRange::new(2, 5), 7),
            ],
        )
        .unwrap();
        let w = detect_stripe_conflict(&b).unwrap();
        check_witness(&b, &w);
        assert!((2..=5).contains(&w.x) && w.y <= 3);
        assert_eq!((w.rule_a, w.rule_b), (0, 1));
    }

    #[test]
    fn duplicate_universal() {
        let c = cell((4, 6), (10, 12));
        let b = StripeBundle::new(c, vec![Stripe::universal(3, 4), Stripe::universal(8, 4)]).unwrap();
        let w = detect_stripe_conflict(&b).unwrap();
        check_witness(&b, &w);
        assert_eq!((w.rule_a, w.rule_b, w.priority), (3, 8, 4));
    }

    #[test]
    fn single_and_empty() {
        let c = cell((0, 3), (0, 3));
        assert_eq!(detect_stripe_conflict(&StripeBundle::new(c, vec![]).unwrap()), None);
        let b = StripeBundle::new(c, vec![Stripe::universal(0, 1)]).unwrap();
        assert_eq!(detect_stripe_conflict(&b), None);
    }

    #[test]
    fn universal_against_horizontal() {
        let c = cell((0, 7), (0, 7));
        let stripes = vec![
            Stripe::universal(0, 3),
            Stripe::horizontal(1, AddressRange::new(2, 5), 3),
            Stripe::vertical(2, AddressRange::new(0, 7 - 1), 9),
        ];
        let b = StripeBundle::new(c, stripes).unwrap();
        let w = detect_stripe_conflict(&b).unwrap();
        check_witness(&b, &w);
        assert_eq!(w.x, 7);

        // Verticals cover every column with a higher priority: no conflict.
        let stripes = vec![
            Stripe::universal(0, 3),
            Stripe::horizontal(1, AddressRange::new(2, 5), 3),
            Stripe::vertical(2, AddressRange::new(0, 3), 9),
            Stripe::vertical(3, AddressRange::new(4, 7 - 1), 9),
            Stripe::vertical(4, AddressRange::new(5, 7), 8),
        ];
        let b = StripeBundle::new(c, stripes).unwrap();
        assert_eq!(detect_stripe_conflict(&b), None);
        assert!(!grid_conflict(&b));
    }

    #[test]
    fn rejects_improper_extents() {
        let c = cell((0, 9), (0, 9));
        assert!(StripeBundle::new(c, vec![Stripe::horizontal(0, AddressRange::new(0, 9), 1)]).is_err());
        assert!(StripeBundle::new(c, vec![Stripe::vertical(0, AddressRange::new(3, 10), 1)]).is_err());
    }

    #[test]
    fn order_check() {
        let c = cell((0, 9), (0, 9));
        let mut b = StripeBundle::new(
            c,
            vec![
                Stripe::horizontal(0, AddressRange::new(0, 4), 5),
                Stripe::horizontal(1, AddressRange::new(3, 8), 1),
            ],
        )
        .unwrap();
        assert_eq!(b.check_orders(), Ok(()));
        b.priority_order.reverse();
        assert_eq!(b.check_orders(), Err(StripeError::BadOrder));
    }

    #[test]
    fn random_bundles_match_grid() {
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let mut next = move |m: u64| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state % m
        };
        for _ in 0..1500 {
            let w = 2 + next(14);
            let h = 2 + next(14);
            let c = cell((3, 3 + w - 1), (5, 5 + h - 1));
            let levels = 1 + next(5);
            let mut stripes = Vec::new();
            for rule in 0..next(12) as u32 {
                let p = next(levels);
                stripes.push(match next(5) {
                    0 => Stripe::universal(rule, p),
                    1 | 2 => {
                        let a = next(h);
                        let len = 1 + next(h - 1);
                        let lo = a.min(h - len);
                        Stripe::horizontal(rule, AddressRange::new(5 + lo, 5 + lo + len - 1), p)
                    }
                    _ => {
                        let a = next(w);
                        let len = 1 + next(w - 1);
                        let lo = a.min(w - len);
                        Stripe::vertical(rule, AddressRange::new(3 + lo, 3 + lo + len - 1), p)
                    }
                });
            }
            let b = StripeBundle::new(c, stripes).unwrap();
            let found = detect_stripe_conflict(&b);
            assert_eq!(found.is_some(), grid_conflict(&b), "{b:?}");
            if let Some(w) = found {
                check_witness(&b, &w);
            }
        }
    }
}
