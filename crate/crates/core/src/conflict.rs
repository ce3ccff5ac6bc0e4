//! Conflict detection over a whole rule set.
//!
//! Rule bounds are rank-compressed (a rule `[lo, hi]` becomes the closed rank
//! interval `[rank(lo), rank(hi + 1)]`), so each unit square of rank space is
//! one block of raw points sharing the same set of rules. A kD-tree over all
//! rule corners is walked depth first. Each cell carries the best one or two
//! rules covering it and the rules crossing it, in priority order and in
//! boundary order on each axis. In a leaf every crossing rule spans the full
//! width or height, so the leaf is a stripe bundle.
//!
//! Children receive their lists by stable filtering. While a child is being
//! visited the parent keeps only what the child did not take, and the lists
//! are merged back afterwards, so the resident total never exceeds the root's.

use std::collections::BTreeSet;

use crate::kdtree::{classify_rect, CellId, KdTree, RectRelation};
use crate::model::{Address, AddressRange, ModelError, Priority, Rect, RuleId, RuleSet};
use crate::stripes::{detect_stripe_conflict, ConflictWitness, Side, Stripe, StripeBundle};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConflictCounters {
    pub cells_visited: u64,
    pub leaves_visited: u64,
    pub stripes_processed: u64,
    /// Largest total length of the priority and boundary lists alive at once,
    /// counting the copies made while splitting and merging.
    pub peak_resident: u64,
    /// Detection passes; above one only for the filtered variant.
    pub rounds: u64,
}

impl ConflictCounters {
    fn absorb(&mut self, other: &ConflictCounters) {
        self.cells_visited += other.cells_visited;
        self.leaves_visited += other.leaves_visited;
        self.stripes_processed += other.stripes_processed;
        self.peak_resident = self.peak_resident.max(other.peak_resident);
        self.rounds += other.rounds;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub witness: Option<ConflictWitness>,
    pub counters: ConflictCounters,
}

/// A rectangle with the priority of the rule it came from.
#[derive(Debug, Clone, Copy)]
struct Piece {
    origin: RuleId,
    priority: Priority,
    src: AddressRange,
    dst: AddressRange,
}

impl Piece {
    fn contains(&self, x: Address, y: Address) -> bool {
        self.src.contains(x) && self.dst.contains(y)
    }
}

/// Raw hit: point plus two piece indices.
#[derive(Debug, Clone, Copy)]
struct Hit {
    x: Address,
    y: Address,
    a: usize,
    b: usize,
    priority: Priority,
}

/// Decides whether some point has no unique highest-priority rule.
pub fn detect_conflict(rs: &RuleSet) -> Result<ConflictReport, ModelError> {
    rs.ensure_valid()?;
    let pieces = pieces_of(rs);
    let (hit, counters) = detect_pieces(&pieces);
    let witness = hit.map(|h| {
        let w = ConflictWitness {
            x: h.x,
            y: h.y,
            rule_a: pieces[h.a].origin.min(pieces[h.b].origin),
            rule_b: pieces[h.a].origin.max(pieces[h.b].origin),
            priority: h.priority,
        };
        assert!(validate(&pieces, &w), "invalid witness {w:?}");
        w
    });
    Ok(ConflictReport { witness, counters })
}

/// Like [`detect_conflict`], but only reports points where two tied top
/// rules have actions satisfying `actions_conflict`.
///
/// Each geometric witness whose tied rules all agree is removed by cutting
/// the overlap of the pair out of one member, then detection runs again.
pub fn detect_conflict_filtered<F>(rs: &RuleSet, actions_conflict: F) -> Result<ConflictReport, ModelError>
where
    F: Fn(&str, &str) -> bool,
{
    rs.ensure_valid()?;
    let actions: Vec<&str> = rs
        .rules
        .iter()
        .map(|r| r.action.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let action_of = |p: &Piece| rs.rules[p.origin as usize].action.as_str();
    let clash = |a: &Piece, b: &Piece| actions_conflict(action_of(a), action_of(b));

    let mut pieces = pieces_of(rs);
    let mut total = ConflictCounters::default();
    loop {
        let (hit, counters) = detect_pieces(&pieces);
        total.absorb(&counters);
        let Some(hit) = hit else {
            return Ok(ConflictReport {
                witness: None,
                counters: total,
            });
        };

        let tied = top_pieces(&pieces, hit.x, hit.y);
        if let Some(w) = clashing_pair(&pieces, &tied, hit.x, hit.y, &clash) {
            return Ok(ConflictReport {
                witness: Some(w),
                counters: total,
            });
        }

        let (a, b) = (pieces[hit.a], pieces[hit.b]);
        let interchangeable = actions.iter().all(|t| {
            actions_conflict(action_of(&a), t) == actions_conflict(action_of(&b), t)
                && actions_conflict(t, action_of(&a)) == actions_conflict(t, action_of(&b))
        });
        if !interchangeable {
            if let Some(w) = scan_overlap(&pieces, &a, &b, &clash) {
                return Ok(ConflictReport {
                    witness: Some(w),
                    counters: total,
                });
            }
        }
        let rest = subtract(&b, &a);
        pieces.swap_remove(hit.b);
        pieces.extend(rest);
    }
}

fn pieces_of(rs: &RuleSet) -> Vec<Piece> {
    rs.rules
        .iter()
        .map(|r| Piece {
            origin: r.id,
            priority: r.priority,
            src: r.src,
            dst: r.dst,
        })
        .collect()
}

fn top_pieces(pieces: &[Piece], x: Address, y: Address) -> Vec<usize> {
    let best = pieces.iter().filter(|p| p.contains(x, y)).map(|p| p.priority).max();
    (0..pieces.len())
        .filter(|&i| pieces[i].contains(x, y) && Some(pieces[i].priority) == best)
        .collect()
}

fn validate(pieces: &[Piece], w: &ConflictWitness) -> bool {
    let tied = top_pieces(pieces, w.x, w.y);
    let has = |id| tied.iter().any(|&i| pieces[i].origin == id);
    w.rule_a != w.rule_b && has(w.rule_a) && has(w.rule_b) && pieces[tied[0]].priority == w.priority
}

fn clashing_pair<F>(pieces: &[Piece], tied: &[usize], x: Address, y: Address, clash: &F) -> Option<ConflictWitness>
where
    F: Fn(&Piece, &Piece) -> bool,
{
    for (n, &i) in tied.iter().enumerate() {
        for &j in &tied[n + 1..] {
            let (a, b) = (&pieces[i], &pieces[j]);
            if a.origin != b.origin && (clash(a, b) || clash(b, a)) {
                return Some(ConflictWitness {
                    x,
                    y,
                    rule_a: a.origin.min(b.origin),
                    rule_b: a.origin.max(b.origin),
                    priority: a.priority,
                });
            }
        }
    }
    None
}

/// Every arrangement cell of `a ∩ b`, checked directly.
fn scan_overlap<F>(pieces: &[Piece], a: &Piece, b: &Piece, clash: &F) -> Option<ConflictWitness>
where
    F: Fn(&Piece, &Piece) -> bool,
{
    let xr = a.src.intersection(&b.src)?;
    let yr = a.dst.intersection(&b.dst)?;
    let cuts = |r: AddressRange, bounds: &mut dyn Iterator<Item = AddressRange>| {
        let mut v = BTreeSet::from([r.lo]);
        for e in bounds {
            for c in [e.lo as u128, e.hi as u128 + 1] {
                if r.lo as u128 <= c && c <= r.hi as u128 {
                    v.insert(c as Address);
                }
            }
        }
        v
    };
    let xs = cuts(xr, &mut pieces.iter().map(|p| p.src));
    let ys = cuts(yr, &mut pieces.iter().map(|p| p.dst));
    for &x in &xs {
        for &y in &ys {
            let tied = top_pieces(pieces, x, y);
            if let Some(w) = clashing_pair(pieces, &tied, x, y, clash) {
                return Some(w);
            }
        }
    }
    None
}

/// `b` minus `a`, as at most four disjoint rectangles.
fn subtract(b: &Piece, a: &Piece) -> Vec<Piece> {
    let with = |src, dst| Piece { src, dst, ..*b };
    let mut out = Vec::with_capacity(4);
    let Some(xi) = b.src.intersection(&a.src) else {
        return vec![*b];
    };
    let Some(yi) = b.dst.intersection(&a.dst) else {
        return vec![*b];
    };
    if b.src.lo < xi.lo {
        out.push(with(AddressRange::new(b.src.lo, xi.lo - 1), b.dst));
    }
    if xi.hi < b.src.hi {
        out.push(with(AddressRange::new(xi.hi + 1, b.src.hi), b.dst));
    }
    if b.dst.lo < yi.lo {
        out.push(with(xi, AddressRange::new(b.dst.lo, yi.lo - 1)));
    }
    if yi.hi < b.dst.hi {
        out.push(with(xi, AddressRange::new(yi.hi + 1, b.dst.hi)));
    }
    out
}

/// Sorted distinct `{lo, hi + 1}` over all ranges.
fn compress(ranges: impl Iterator<Item = AddressRange>) -> Vec<u128> {
    let mut v: Vec<u128> = ranges.flat_map(|r| [r.lo as u128, r.hi as u128 + 1]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn rank(sorted: &[u128], v: u128) -> u64 {
    sorted.binary_search(&v).expect("coordinate was compressed") as u64
}

#[derive(Debug, Clone, Copy, Default)]
struct Cover {
    best: Option<(Priority, u32)>,
    second: Option<u32>,
}

impl Cover {
    /// Keeps the two smallest indices at the highest priority seen.
    fn fold(&mut self, priority: Priority, i: u32) {
        match self.best {
            Some((p, _)) if p > priority => {}
            Some((p, b)) if p == priority => {
                let (lo, hi) = (b.min(i), b.max(i));
                self.best = Some((p, lo));
                self.second = Some(match self.second {
                    Some(s) if s < hi => s,
                    _ => hi,
                });
            }
            _ => {
                self.best = Some((priority, i));
                self.second = None;
            }
        }
    }
}

/// Resident lists of one cell, holding positions into the global orders.
#[derive(Debug, Default)]
struct Lists {
    prio: Vec<u32>,
    h: Vec<u32>,
    v: Vec<u32>,
}

impl Lists {
    fn len(&self) -> u64 {
        (self.prio.len() + self.h.len() + self.v.len()) as u64
    }
}

struct Walk<'a> {
    tree: &'a KdTree,
    ranked: Vec<Rect>,
    priority: Vec<Priority>,
    /// Piece indices by (priority, index).
    prio_order: Vec<u32>,
    /// `(piece, side)` by rank position on each axis.
    y_order: Vec<(u32, Side)>,
    x_order: Vec<(u32, Side)>,
    xs: &'a [u128],
    ys: &'a [u128],
    /// Leaf scratch: stripe index of each piece, or `u32::MAX`.
    stripe_of: Vec<u32>,
    resident: u64,
    counters: ConflictCounters,
    hit: Option<Hit>,
}

fn detect_pieces(pieces: &[Piece]) -> (Option<Hit>, ConflictCounters) {
    let mut counters = ConflictCounters {
        rounds: 1,
        ..Default::default()
    };
    if pieces.len() < 2 {
        return (None, counters);
    }
    let xs = compress(pieces.iter().map(|p| p.src));
    let ys = compress(pieces.iter().map(|p| p.dst));
    let ranked: Vec<Rect> = pieces
        .iter()
        .map(|p| {
            Rect::new(
                AddressRange::new(rank(&xs, p.src.lo as u128), rank(&xs, p.src.hi as u128 + 1)),
                AddressRange::new(rank(&ys, p.dst.lo as u128), rank(&ys, p.dst.hi as u128 + 1)),
            )
        })
        .collect();
    let corners: Vec<(Address, Address)> = ranked
        .iter()
        .flat_map(|r| [(r.x.lo, r.y.lo), (r.x.lo, r.y.hi), (r.x.hi, r.y.lo), (r.x.hi, r.y.hi)])
        .collect();
    let root_rect = Rect::new(
        AddressRange::new(0, xs.len() as u64 - 1),
        AddressRange::new(0, ys.len() as u64 - 1),
    );
    let tree = KdTree::with_bounds(&corners, root_rect);

    let n = pieces.len();
    let mut prio_order: Vec<u32> = (0..n as u32).collect();
    prio_order.sort_by_key(|&i| (pieces[i as usize].priority, i));
    let axis_order = |pick: fn(&Rect) -> AddressRange| {
        let mut v: Vec<(u32, Side)> = (0..n as u32)
            .flat_map(|i| [(i, Side::Low), (i, Side::High)])
            .collect();
        v.sort_by_key(|&(i, s)| {
            let r = pick(&ranked[i as usize]);
            match s {
                Side::Low => r.lo,
                Side::High => r.hi,
            }
        });
        v
    };
    let y_order = axis_order(|r| r.y);
    let x_order = axis_order(|r| r.x);

    let mut walk = Walk {
        tree: &tree,
        priority: pieces.iter().map(|p| p.priority).collect(),
        ranked,
        prio_order,
        y_order,
        x_order,
        xs: &xs,
        ys: &ys,
        stripe_of: vec![u32::MAX; n],
        resident: 0,
        counters,
        hit: None,
    };

    let root = tree.root();
    let all = Lists {
        prio: (0..n as u32).collect(),
        h: (0..2 * n as u32).collect(),
        v: (0..2 * n as u32).collect(),
    };
    walk.allocated(all.len());
    let (lists, cover, rest) = walk.split_for(root, Cover::default(), all);
    walk.visit(root, cover, lists);
    drop(rest);
    counters = walk.counters;
    (walk.hit, counters)
}

impl Walk<'_> {
    fn allocated(&mut self, len: u64) {
        self.resident += len;
        self.counters.peak_resident = self.counters.peak_resident.max(self.resident);
    }

    /// Splits `parent` into what crosses `cell` and the remainder, folding
    /// the rules that cover `cell` into `cover`.
    fn split_for(&mut self, cell: CellId, mut cover: Cover, parent: Lists) -> (Lists, Cover, Lists) {
        let rect = self.tree.cell(cell).rect;
        let mut take = Lists::default();
        let mut keep = Lists::default();
        for &pos in &parent.prio {
            let i = self.prio_order[pos as usize];
            match classify_rect(&rect, &self.ranked[i as usize]) {
                RectRelation::Crosses => {
                    take.prio.push(pos);
                    self.stripe_of[i as usize] = 0;
                }
                RectRelation::Covers => {
                    cover.fold(self.priority[i as usize], i);
                    keep.prio.push(pos);
                }
                RectRelation::Disjoint => keep.prio.push(pos),
            }
        }
        for (src, order, dst_take, dst_keep) in [
            (&parent.h, &self.y_order, &mut take.h, &mut keep.h),
            (&parent.v, &self.x_order, &mut take.v, &mut keep.v),
        ] {
            for &pos in src {
                if self.stripe_of[order[pos as usize].0 as usize] == 0 {
                    dst_take.push(pos);
                } else {
                    dst_keep.push(pos);
                }
            }
        }
        for &pos in &take.prio {
            self.stripe_of[self.prio_order[pos as usize] as usize] = u32::MAX;
        }
        self.allocated(take.len() + keep.len());
        self.resident -= parent.len();
        (take, cover, keep)
    }

    fn visit(&mut self, cell: CellId, cover: Cover, lists: Lists) -> Lists {
        self.counters.cells_visited += 1;
        let c = *self.tree.cell(cell);
        let Some((a, b)) = c.children else {
            self.leaf(cell, cover, &lists);
            return lists;
        };
        let mut lists = lists;
        for child in [a, b] {
            if self.hit.is_some() {
                break;
            }
            let (take, child_cover, keep) = self.split_for(child, cover, lists);
            let back = self.visit(child, child_cover, take);
            let freed = back.len() + keep.len();
            lists = merge(back, keep);
            self.allocated(lists.len());
            self.resident -= freed;
        }
        lists
    }

    fn leaf(&mut self, cell: CellId, cover: Cover, lists: &Lists) {
        let rect = self.tree.cell(cell).rect;
        if rect.x.lo == rect.x.hi || rect.y.lo == rect.y.hi {
            return;
        }
        self.counters.leaves_visited += 1;
        // Unit squares of the leaf, as a closed range of elementary indices.
        let ex = AddressRange::new(rect.x.lo, rect.x.hi - 1);
        let ey = AddressRange::new(rect.y.lo, rect.y.hi - 1);

        let mut universals: Vec<u32> = Vec::with_capacity(2);
        if let Some((_, i)) = cover.best {
            universals.push(i);
            universals.extend(cover.second);
        }
        let mut stripes = Vec::with_capacity(lists.prio.len() + universals.len());
        let mut priority_order = Vec::with_capacity(stripes.capacity());
        let mut u = universals.iter().peekable();
        let key = |i: u32| (self.priority[i as usize], i);
        for &pos in &lists.prio {
            let i = self.prio_order[pos as usize];
            while let Some(&&j) = u.peek() {
                if key(j) > key(i) {
                    break;
                }
                priority_order.push(stripes.len() as u32);
                stripes.push(Stripe::universal(j, self.priority[j as usize]));
                u.next();
            }
            let r = self.ranked[i as usize];
            let p = self.priority[i as usize];
            let stripe = if r.x.contains_range(&rect.x) {
                Stripe::horizontal(i, AddressRange::new(r.y.lo.max(rect.y.lo), r.y.hi.min(rect.y.hi) - 1), p)
            } else {
                debug_assert!(r.y.contains_range(&rect.y), "rule corner inside a leaf");
                Stripe::vertical(i, AddressRange::new(r.x.lo.max(rect.x.lo), r.x.hi.min(rect.x.hi) - 1), p)
            };
            self.stripe_of[i as usize] = stripes.len() as u32;
            priority_order.push(stripes.len() as u32);
            stripes.push(stripe);
        }
        for &j in u {
            priority_order.push(stripes.len() as u32);
            stripes.push(Stripe::universal(j, self.priority[j as usize]));
        }

        let ends = |list: &[u32], order: &[(u32, Side)], want: crate::stripes::Orientation| {
            list.iter()
                .filter_map(|&pos| {
                    let (i, side) = order[pos as usize];
                    let s = self.stripe_of[i as usize];
                    (stripes[s as usize].orientation == want).then_some((s, side))
                })
                .collect::<Vec<_>>()
        };
        let h_order = ends(&lists.h, &self.y_order, crate::stripes::Orientation::Horizontal);
        let v_order = ends(&lists.v, &self.x_order, crate::stripes::Orientation::Vertical);
        for &pos in &lists.prio {
            self.stripe_of[self.prio_order[pos as usize] as usize] = u32::MAX;
        }

        self.counters.stripes_processed += stripes.len() as u64;
        let bundle = StripeBundle::from_sorted(Rect::new(ex, ey), stripes, priority_order, h_order, v_order);
        if let Some(w) = detect_stripe_conflict(&bundle) {
            self.hit = Some(Hit {
                x: self.xs[w.x as usize] as Address,
                y: self.ys[w.y as usize] as Address,
                a: w.rule_a as usize,
                b: w.rule_b as usize,
                priority: w.priority,
            });
        }
    }
}

/// Merges two ascending position lists of each kind.
fn merge(a: Lists, b: Lists) -> Lists {
    fn two(a: Vec<u32>, b: Vec<u32>) -> Vec<u32> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }
    Lists {
        prio: two(a.prio, b.prio),
        h: two(a.h, b.h),
        v: two(a.v, b.v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rule;
    use crate::oracle::{naive_conflict, witness_is_valid};

    fn rule(id: RuleId, x: (u64, u64), y: (u64, u64), p: Priority, action: &str) -> Rule {
        Rule::new(id, p, AddressRange::new(x.0, x.1), AddressRange::new(y.0, y.1), action)
    }

    fn detect(bits: u32, rules: Vec<Rule>) -> (RuleSet, ConflictReport) {
        let rs = RuleSet::checked(bits, rules).unwrap();
        let report = detect_conflict(&rs).unwrap();
        (rs, report)
    }

    #[test]
    fn overlapping_pair() {
        let (rs, r) = detect(8, vec![rule(0, (0, 10), (0, 10), 1, "permit"), rule(1, (5, 15), (5, 15), 1, "permit")]);
        let w = r.witness.unwrap();
        assert!(witness_is_valid(&rs, &w));
        assert_eq!((w.rule_a, w.rule_b), (0, 1));
        assert!((5..=10).contains(&w.x) && (5..=10).contains(&w.y));
    }

    #[test]
    fn covered_overlap() {
        let (rs, r) = detect(
            8,
            vec![
                rule(0, (0, 10), (0, 10), 1, "permit"),
                rule(1, (5, 15), (5, 15), 1, "permit"),
                rule(2, (5, 10), (5, 10), 2, "deny"),
            ],
        );
        assert_eq!(r.witness, None);
        assert_eq!(naive_conflict(&rs), None);
    }

    #[test]
    fn trivial_sets() {
        let (_, r) = detect(8, vec![]);
        assert_eq!(r.witness, None);
        let (_, r) = detect(8, vec![rule(0, (1, 1), (1, 1), 1, "permit")]);
        assert_eq!(r.witness, None);
    }

    #[test]
    fn identical_rules_and_full_universe() {
        let (rs, r) = detect(64, vec![rule(0, (0, u64::MAX), (0, u64::MAX), 3, "a"), rule(1, (0, u64::MAX), (0, u64::MAX), 3, "b")]);
        assert!(witness_is_valid(&rs, &r.witness.unwrap()));
        let (_, r) = detect(64, vec![rule(0, (0, u64::MAX), (0, u64::MAX), 3, "a"), rule(1, (7, u64::MAX), (0, 9), 4, "b")]);
        assert_eq!(r.witness, None);
    }

    #[test]
    fn subtract_tiles_difference() {
        let b = Piece {
            origin: 1,
            priority: 1,
            src: AddressRange::new(0, 9),
            dst: AddressRange::new(0, 9),
        };
        let a = Piece {
            src: AddressRange::new(3, 5),
            dst: AddressRange::new(4, 20),
            ..b
        };
        let parts = subtract(&b, &a);
        for x in 0..12 {
            for y in 0..12 {
                let n = parts.iter().filter(|p| p.contains(x, y)).count();
                assert_eq!(n, usize::from(b.contains(x, y) && !a.contains(x, y)), "({x},{y})");
            }
        }
    }

    #[test]
    fn filtered_examples() {
        let differ = |a: &str, b: &str| a != b;
        let same = RuleSet::checked(8, vec![rule(0, (0, 9), (0, 9), 1, "permit"), rule(1, (0, 9), (0, 9), 1, "permit")]).unwrap();
        assert_eq!(detect_conflict_filtered(&same, differ).unwrap().witness, None);
        let mixed = RuleSet::checked(8, vec![rule(0, (0, 9), (0, 9), 1, "permit"), rule(1, (5, 20), (5, 20), 1, "deny")]).unwrap();
        let w = detect_conflict_filtered(&mixed, differ).unwrap().witness.unwrap();
        assert!(witness_is_valid(&mixed, &w));
        let empty = RuleSet::checked(8, vec![]).unwrap();
        assert_eq!(detect_conflict_filtered(&empty, differ).unwrap().witness, None);

        // Permit/permit tie masks nothing: a deny ties elsewhere.
        let three = RuleSet::checked(
            8,
            vec![
                rule(0, (0, 9), (0, 9), 1, "permit"),
                rule(1, (0, 9), (0, 9), 1, "permit"),
                rule(2, (9, 30), (9, 30), 1, "deny"),
            ],
        )
        .unwrap();
        let r = detect_conflict_filtered(&three, differ).unwrap();
        let w = r.witness.unwrap();
        assert_eq!((w.x, w.y), (9, 9));
        assert!(r.counters.rounds >= 2);
    }

    #[test]
    fn peak_resident_is_linear() {
        let mut s = 0x1234_5678u64;
        let mut next = move |m: u64| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s % m
        };
        let rules: Vec<Rule> = (0..400)
            .map(|id| {
                let (a, b) = (next(4096), next(4096));
                let (c, d) = (next(4096), next(4096));
                rule(id, (a.min(b), a.max(b)), (c.min(d), c.max(d)), id as u64, "permit")
            })
            .collect();
        let (_, r) = detect(12, rules);
        assert_eq!(r.witness, None);
        assert!(r.counters.peak_resident <= 10 * 400, "{:?}", r.counters);
        assert!(r.counters.leaves_visited > 0);
    }
}
