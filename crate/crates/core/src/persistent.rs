//! Partially persistent maximum-priority interval stabbing.
//!
//! The universe `[0, 2^bits - 1]` is covered by a tree of blocks with fan-out
//! `2^k`. A block covering `[x, y]` splits it into equal subintervals and keeps
//! three tables indexed by subinterval:
//!
//! * `opt[i]`: the best interval registered for subinterval `i`,
//! * `pq[i]`: the ordered multiset that `opt[i]` is the maximum of,
//! * `sub[i]`: the child block for subinterval `i`, or none.
//!
//! An interval is registered on the subintervals it fully covers inside the
//! blocks that contain one of its endpoints (its canonical pieces). A query
//! walks `sub` pointers from a version's root and takes the best `opt` seen,
//! touching at most `ceil(bits / k)` blocks. Updates path-copy only the blocks
//! on the two endpoint paths, so every older root keeps answering as before.
//!
//! Blocks live in flat arenas and are addressed by index. `pq` tables are not
//! materialised per block: the multiset for subinterval `i` of a block at depth
//! `d` is keyed by `(d, start of subinterval i)`, which is the same for every
//! copy of that block, so the handle is shared across versions for free.
//! Queries never read the multisets.
//!
//! In laminar mode there are no multisets at all. Inserting overwrites `opt`
//! entries it beats and removal is an undo that republishes an older root.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::model::{max_address, Address, Priority, MAX_UNIVERSE_BITS};

pub type Version = u32;
pub type IntervalId = u64;

/// Widest block fan-out (`2^MAX_K` table entries) the store will allocate.
pub const MAX_K: u32 = 20;

const NONE: u32 = u32::MAX;
const TIE: u32 = 1 << 31;
const SLOT_MASK: u32 = TIE - 1;
const NO_SUB: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("universe_bits {0} outside 1..=64")]
    UniverseBits(u32),
    #[error("k = {k} must lie in 1..={max} for a {bits}-bit universe")]
    FanOut { k: u32, bits: u32, max: u32 },
    #[error("interval {0} is already active")]
    DuplicateId(IntervalId),
    #[error("interval {0} is not active")]
    UnknownId(IntervalId),
    #[error("interval [{lo}, {hi}] is inverted or outside the universe")]
    BadInterval { lo: Address, hi: Address },
    #[error("operation requires {0:?} mode")]
    WrongMode(StoreMode),
    #[error("version {0} does not exist")]
    NoSuchVersion(Version),
    #[error("point {0} outside the universe")]
    PointOutOfUniverse(Address),
    #[error("interval {id} partially overlaps active interval {other}")]
    NotLaminar { id: IntervalId, other: IntervalId },
    #[error("cannot undo {id}: {top} was inserted later and is still active")]
    UndoOrder { id: IntervalId, top: IntervalId },
    #[error("keys must be strictly increasing")]
    UnsortedKeys,
    #[error("store capacity exhausted")]
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreMode {
    General,
    Laminar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrioInterval {
    pub id: IntervalId,
    pub lo: Address,
    pub hi: Address,
    pub priority: Priority,
    pub payload: u32,
}

impl PrioInterval {
    pub fn new(id: IntervalId, lo: Address, hi: Address, priority: Priority, payload: u32) -> Self {
        Self {
            id,
            lo,
            hi,
            priority,
            payload,
        }
    }

    /// Ordering key: higher priority wins, then the smaller id.
    #[inline]
    pub fn rank_key(&self) -> (Priority, Reverse<IntervalId>) {
        (self.priority, Reverse(self.id))
    }

    #[inline]
    pub fn contains(&self, p: Address) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Work done by a single update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateCost {
    pub blocks_created: u64,
    /// `pq` multiset edits in general mode, `opt` comparisons in laminar mode.
    pub entries_touched: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StoreCounters {
    pub updates: u64,
    pub blocks_created: u64,
    pub max_blocks_per_update: u64,
    pub max_entries_per_update: u64,
    pub last: UpdateCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryTrace<'a> {
    pub best: Option<&'a PrioInterval>,
    /// Another interval containing the point has the same priority as `best`.
    pub tie: bool,
    pub blocks_visited: u32,
}

#[derive(Debug, Clone, Copy)]
struct BlockRec {
    opt: usize,
    sub: usize,
}

#[derive(Debug, Clone, Copy)]
struct Active {
    slot: u32,
    before: Version,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Insert,
    Delete,
    InsertLaminar,
}

type PqEntry = (Priority, Reverse<IntervalId>, u32);

#[derive(Debug, Clone)]
pub struct VersionedIntervalStore {
    bits: u32,
    k: u32,
    mode: StoreMode,
    max: Address,
    /// `(fan-out bits, child width bits)` per depth.
    geom: Vec<(u32, u32)>,
    blocks: Vec<BlockRec>,
    opt: Vec<u32>,
    sub: Vec<u32>,
    roots: Vec<u32>,
    intervals: Vec<PrioInterval>,
    active: HashMap<IntervalId, Active>,
    laminar_stack: Vec<IntervalId>,
    pq: HashMap<(u32, Address), BTreeSet<PqEntry>>,
    /// Blocks at or above this index belong to the update in progress.
    mutable_from: u32,
    check_laminar: bool,
    counters: StoreCounters,
    current: UpdateCost,
}

/// Number of block levels a query walks: `ceil(bits / k)`.
pub fn path_length(bits: u32, k: u32) -> u32 {
    bits.div_ceil(k)
}

impl VersionedIntervalStore {
    pub fn new(universe_bits: u32, k: u32, mode: StoreMode) -> Result<Self, StoreError> {
        if !(1..=MAX_UNIVERSE_BITS).contains(&universe_bits) {
            return Err(StoreError::UniverseBits(universe_bits));
        }
        let max_k = universe_bits.min(MAX_K);
        if k == 0 || k > universe_bits || k > MAX_K {
            return Err(StoreError::FanOut {
                k,
                bits: universe_bits,
                max: max_k,
            });
        }
        let mut geom = Vec::new();
        let mut width = universe_bits;
        while width > 0 {
            let fan = width.min(k);
            geom.push((fan, width - fan));
            width -= fan;
        }
        let mut store = Self {
            bits: universe_bits,
            k,
            mode,
            max: max_address(universe_bits),
            geom,
            blocks: Vec::new(),
            opt: Vec::new(),
            sub: Vec::new(),
            roots: Vec::new(),
            intervals: Vec::new(),
            active: HashMap::new(),
            laminar_stack: Vec::new(),
            pq: HashMap::new(),
            mutable_from: 0,
            check_laminar: false,
            counters: StoreCounters::default(),
            current: UpdateCost::default(),
        };
        let root = store.alloc_block(NONE, 0);
        store.roots.push(root);
        store.counters.blocks_created = 0;
        store.mutable_from = store.blocks.len() as u32;
        Ok(store)
    }

    /// Validate laminarity on every laminar insert (O(active) per insert).
    pub fn set_check_laminar(&mut self, on: bool) {
        self.check_laminar = on;
    }

    pub fn universe_bits(&self) -> u32 {
        self.bits
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    /// Maximum number of blocks a query visits.
    pub fn path_length(&self) -> u32 {
        self.geom.len() as u32
    }

    pub fn fan_out_at_depth(&self, depth: usize) -> Option<u64> {
        self.geom.get(depth).map(|&(f, _)| 1u64 << f)
    }

    pub fn latest_version(&self) -> Version {
        (self.roots.len() - 1) as Version
    }

    /// Number of versions including the empty version 0.
    pub fn version_count(&self) -> usize {
        self.roots.len()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn counters(&self) -> StoreCounters {
        self.counters
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn active_intervals(&self) -> impl Iterator<Item = &PrioInterval> + '_ {
        self.active.values().map(|a| &self.intervals[a.slot as usize])
    }

    pub fn interval(&self, id: IntervalId) -> Option<&PrioInterval> {
        self.active.get(&id).map(|a| &self.intervals[a.slot as usize])
    }

    /// Rough heap footprint of the tables.
    pub fn bytes_estimate(&self) -> usize {
        use std::mem::size_of;
        let pq_entries: usize = self.pq.values().map(BTreeSet::len).sum();
        self.opt.len() * size_of::<u32>()
            + self.sub.len() * size_of::<u32>()
            + self.blocks.len() * size_of::<BlockRec>()
            + self.roots.len() * size_of::<u32>()
            + self.intervals.len() * size_of::<PrioInterval>()
            + self.active.len() * (size_of::<IntervalId>() + size_of::<Active>())
            + pq_entries * size_of::<PqEntry>()
    }

    /// Inserts `iv` (general mode) and returns the new version.
    pub fn insert(&mut self, iv: PrioInterval) -> Result<Version, StoreError> {
        self.require_mode(StoreMode::General)?;
        self.check_new(&iv)?;
        let slot = self.push_interval(iv)?;
        let before = self.latest_version();
        self.active.insert(iv.id, Active { slot, before });
        Ok(self.run_update(slot, Op::Insert))
    }

    /// Deletes an active interval (general mode) and returns the new version.
    pub fn delete(&mut self, id: IntervalId) -> Result<Version, StoreError> {
        self.require_mode(StoreMode::General)?;
        let act = self.active.remove(&id).ok_or(StoreError::UnknownId(id))?;
        Ok(self.run_update(act.slot, Op::Delete))
    }

    /// Inserts `iv` in laminar mode. Only `opt` entries are touched; the
    /// version before the insert is remembered for `undo`.
    pub fn insert_laminar(&mut self, iv: PrioInterval) -> Result<Version, StoreError> {
        self.require_mode(StoreMode::Laminar)?;
        self.check_new(&iv)?;
        if self.check_laminar {
            for other in self.active_intervals() {
                let nested = (other.lo <= iv.lo && iv.hi <= other.hi)
                    || (iv.lo <= other.lo && other.hi <= iv.hi);
                let disjoint = other.hi < iv.lo || iv.hi < other.lo;
                if !nested && !disjoint {
                    return Err(StoreError::NotLaminar {
                        id: iv.id,
                        other: other.id,
                    });
                }
            }
        }
        let slot = self.push_interval(iv)?;
        let before = self.latest_version();
        self.active.insert(iv.id, Active { slot, before });
        self.laminar_stack.push(iv.id);
        Ok(self.run_update(slot, Op::InsertLaminar))
    }

    /// Reverts the laminar insert of `id` by republishing the root that was
    /// current just before it. Every later insert must already be undone.
    pub fn undo(&mut self, id: IntervalId) -> Result<Version, StoreError> {
        self.require_mode(StoreMode::Laminar)?;
        let act = *self.active.get(&id).ok_or(StoreError::UnknownId(id))?;
        match self.laminar_stack.last() {
            Some(&top) if top == id => {}
            Some(&top) => return Err(StoreError::UndoOrder { id, top }),
            None => return Err(StoreError::UnknownId(id)),
        }
        self.laminar_stack.pop();
        self.active.remove(&id);
        let root = self.roots[act.before as usize];
        self.roots.push(root);
        self.record_cost(UpdateCost::default());
        Ok(self.latest_version())
    }

    pub fn query(&self, version: Version, p: Address) -> Result<Option<&PrioInterval>, StoreError> {
        self.query_traced(version, p).map(|t| t.best)
    }

    /// Query that also reports ties and the number of blocks visited.
    pub fn query_traced(&self, version: Version, p: Address) -> Result<QueryTrace<'_>, StoreError> {
        let root = *self
            .roots
            .get(version as usize)
            .ok_or(StoreError::NoSuchVersion(version))?;
        if p > self.max {
            return Err(StoreError::PointOutOfUniverse(p));
        }
        Ok(self.walk(root, p))
    }

    #[inline]
    fn walk(&self, root: u32, p: Address) -> QueryTrace<'_> {
        let mut block = root as usize;
        let mut base: Address = 0;
        let mut best: Option<&PrioInterval> = None;
        let mut tie = false;
        let mut visited = 0;
        for &(_, child_bits) in &self.geom {
            visited += 1;
            let rec = self.blocks[block];
            let idx = ((p - base) >> child_bits) as usize;
            let entry = self.opt[rec.opt + idx];
            if entry != NONE {
                let cand = &self.intervals[(entry & SLOT_MASK) as usize];
                match best {
                    None => {
                        best = Some(cand);
                        tie = entry & TIE != 0;
                    }
                    Some(b) if cand.priority > b.priority => {
                        best = Some(cand);
                        tie = entry & TIE != 0;
                    }
                    Some(b) if cand.priority == b.priority => {
                        tie = true;
                        if cand.id < b.id {
                            best = Some(cand);
                        }
                    }
                    Some(_) => {}
                }
            }
            if rec.sub == NO_SUB {
                break;
            }
            let next = self.sub[rec.sub + idx];
            if next == NONE {
                break;
            }
            block = next as usize;
            base += (idx as u64) << child_bits;
        }
        QueryTrace {
            best,
            tie,
            blocks_visited: visited,
        }
    }

    /// Builds a single-version laminar store holding all of `intervals`.
    /// Fresh blocks are edited in place, so shared path prefixes are stored
    /// once.
    pub(crate) fn build_static(
        universe_bits: u32,
        k: u32,
        intervals: impl IntoIterator<Item = PrioInterval>,
    ) -> Result<Self, StoreError> {
        let mut store = Self::new(universe_bits, k, StoreMode::Laminar)?;
        let mut root = store.roots[0];
        store.mutable_from = store.blocks.len() as u32;
        store.current = UpdateCost::default();
        for iv in intervals {
            store.check_new(&iv)?;
            let slot = store.push_interval(iv)?;
            root = store.apply(root, 0, 0, slot, Op::InsertLaminar);
        }
        store.roots.push(root);
        let cost = store.current;
        store.record_cost(cost);
        store.mutable_from = store.blocks.len() as u32;
        Ok(store)
    }

    fn require_mode(&self, mode: StoreMode) -> Result<(), StoreError> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(StoreError::WrongMode(mode))
        }
    }

    fn check_new(&self, iv: &PrioInterval) -> Result<(), StoreError> {
        if iv.lo > iv.hi || iv.hi > self.max {
            return Err(StoreError::BadInterval { lo: iv.lo, hi: iv.hi });
        }
        if self.active.contains_key(&iv.id) {
            return Err(StoreError::DuplicateId(iv.id));
        }
        Ok(())
    }

    fn push_interval(&mut self, iv: PrioInterval) -> Result<u32, StoreError> {
        let slot = self.intervals.len();
        if slot >= SLOT_MASK as usize {
            return Err(StoreError::Capacity);
        }
        self.intervals.push(iv);
        Ok(slot as u32)
    }

    fn run_update(&mut self, slot: u32, op: Op) -> Version {
        self.mutable_from = self.blocks.len() as u32;
        self.current = UpdateCost::default();
        let root = *self.roots.last().expect("version 0 always exists");
        let new_root = self.apply(root, 0, 0, slot, op);
        debug_assert_ne!(new_root, NONE);
        self.roots.push(new_root);
        self.mutable_from = self.blocks.len() as u32;
        let cost = self.current;
        self.record_cost(cost);
        self.latest_version()
    }

    fn record_cost(&mut self, cost: UpdateCost) {
        let c = &mut self.counters;
        c.updates += 1;
        c.last = cost;
        c.max_blocks_per_update = c.max_blocks_per_update.max(cost.blocks_created);
        c.max_entries_per_update = c.max_entries_per_update.max(cost.entries_touched);
    }

    /// Copies `old` (or allocates an empty block when `old` is `NONE`).
    fn alloc_block(&mut self, old: u32, depth: usize) -> u32 {
        let (fan, child_bits) = self.geom[depth];
        let n = 1usize << fan;
        let opt = self.opt.len();
        let sub = if child_bits > 0 { self.sub.len() } else { NO_SUB };
        if old == NONE {
            self.opt.resize(opt + n, NONE);
            if sub != NO_SUB {
                self.sub.resize(sub + n, NONE);
            }
        } else {
            let rec = self.blocks[old as usize];
            self.opt.extend_from_within(rec.opt..rec.opt + n);
            if sub != NO_SUB {
                self.sub.extend_from_within(rec.sub..rec.sub + n);
            }
        }
        let id = self.blocks.len();
        assert!(id < NONE as usize, "block arena exhausted");
        self.blocks.push(BlockRec { opt, sub });
        self.counters.blocks_created += 1;
        self.current.blocks_created += 1;
        id as u32
    }

    /// Applies `op` for interval `slot` to the block `old` covering the
    /// aligned range starting at `base`; returns the replacement block, or
    /// `NONE` when a delete leaves a non-root block empty.
    fn apply(&mut self, old: u32, depth: usize, base: Address, slot: u32, op: Op) -> u32 {
        let (fan, child_bits) = self.geom[depth];
        let block = if old != NONE && old >= self.mutable_from {
            old
        } else {
            self.alloc_block(old, depth)
        };
        let iv = self.intervals[slot as usize];
        let width = fan + child_bits;
        let block_hi = if width >= 64 {
            u64::MAX
        } else {
            base + ((1u64 << width) - 1)
        };
        let lo = iv.lo.max(base);
        let hi = iv.hi.min(block_hi);
        debug_assert!(lo <= hi, "apply reached a block the interval misses");
        let first = ((lo - base) >> child_bits) as usize;
        let last = ((hi - base) >> child_bits) as usize;
        let sub_span = (1u64 << child_bits) - 1;
        for i in first..=last {
            let sub_lo = base + ((i as u64) << child_bits);
            let sub_hi = sub_lo + sub_span;
            if iv.lo <= sub_lo && sub_hi <= iv.hi {
                self.register(block, i, depth as u32, sub_lo, slot, op);
            } else {
                // Partially covered, so it holds an endpoint and child_bits > 0.
                let at = self.blocks[block as usize].sub + i;
                let child = self.sub[at];
                debug_assert!(op != Op::Delete || child != NONE);
                let replaced = self.apply(child, depth + 1, sub_lo, slot, op);
                self.sub[self.blocks[block as usize].sub + i] = replaced;
            }
        }
        if op == Op::Delete && depth > 0 && self.block_is_empty(block, depth) {
            return NONE;
        }
        block
    }

    fn block_is_empty(&self, block: u32, depth: usize) -> bool {
        let n = 1usize << self.geom[depth].0;
        let rec = self.blocks[block as usize];
        self.opt[rec.opt..rec.opt + n].iter().all(|&e| e == NONE)
            && (rec.sub == NO_SUB || self.sub[rec.sub..rec.sub + n].iter().all(|&e| e == NONE))
    }

    fn register(&mut self, block: u32, i: usize, depth: u32, sub_lo: Address, slot: u32, op: Op) {
        self.current.entries_touched += 1;
        let at = self.blocks[block as usize].opt + i;
        let iv = self.intervals[slot as usize];
        match op {
            Op::Insert | Op::Delete => {
                let key = (iv.priority, Reverse(iv.id), slot);
                let entry = match op {
                    Op::Insert => {
                        let set = self.pq.entry((depth, sub_lo)).or_default();
                        set.insert(key);
                        encode_top(set)
                    }
                    _ => match self.pq.get_mut(&(depth, sub_lo)) {
                        Some(set) => {
                            set.remove(&key);
                            let e = encode_top(set);
                            if set.is_empty() {
                                self.pq.remove(&(depth, sub_lo));
                            }
                            e
                        }
                        None => NONE,
                    },
                };
                self.opt[at] = entry;
            }
            Op::InsertLaminar => {
                let cur = self.opt[at];
                self.opt[at] = if cur == NONE {
                    slot
                } else {
                    let held = &self.intervals[(cur & SLOT_MASK) as usize];
                    if iv.priority > held.priority {
                        slot
                    } else if iv.priority < held.priority {
                        cur
                    } else if iv.id < held.id {
                        slot | TIE
                    } else {
                        cur | TIE
                    }
                };
            }
        }
    }
}

fn encode_top(set: &BTreeSet<PqEntry>) -> u32 {
    let mut it = set.iter().rev();
    match it.next() {
        None => NONE,
        Some(&(p, _, slot)) => match it.next() {
            Some(&(q, _, _)) if q == p => slot | TIE,
            _ => slot,
        },
    }
}

/// Predecessor search over a static key set, answered by a laminar store
/// holding `[s, U-1]` with priority `s` for every key `s`: the best interval
/// containing `q` starts at the predecessor of `q`.
#[derive(Debug, Clone)]
pub struct PredecessorIndex {
    store: VersionedIntervalStore,
    len: usize,
}

impl PredecessorIndex {
    /// `keys` must be strictly increasing and inside the universe.
    pub fn build(keys: &[Address], universe_bits: u32, k: u32) -> Result<Self, StoreError> {
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StoreError::UnsortedKeys);
        }
        let max = if (1..=MAX_UNIVERSE_BITS).contains(&universe_bits) {
            max_address(universe_bits)
        } else {
            return Err(StoreError::UniverseBits(universe_bits));
        };
        if let Some(&last) = keys.last() {
            if last > max {
                return Err(StoreError::BadInterval { lo: last, hi: max });
            }
        }
        let store = VersionedIntervalStore::build_static(
            universe_bits,
            k,
            keys.iter()
                .enumerate()
                .map(|(rank, &s)| PrioInterval::new(rank as IntervalId, s, max, s, rank as u32)),
        )?;
        Ok(Self {
            store,
            len: keys.len(),
        })
    }

    /// Largest key `<= q`.
    pub fn predecessor(&self, q: Address) -> Result<Option<Address>, StoreError> {
        Ok(self.predecessor_rank(q)?.map(|(s, _)| s))
    }

    /// Largest key `<= q` together with its position in the key list.
    #[inline]
    pub fn predecessor_rank(&self, q: Address) -> Result<Option<(Address, usize)>, StoreError> {
        let trace = self.store.query_traced(self.store.latest_version(), q)?;
        Ok(trace.best.map(|iv| (iv.lo, iv.payload as usize)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn store(&self) -> &VersionedIntervalStore {
        &self.store
    }
}
