//! Packet classification by a left-to-right sweep.
//!
//! Every rule contributes an insert event at `src.lo` and a delete event at
//! `src.hi + 1`, each carrying the rule's destination range. Replaying the
//! events into a [`VersionedIntervalStore`] leaves one version per event; the
//! version reached after the last event at coordinate `e` describes the
//! active rules for every `x` in `[e, next event)`. A query finds the
//! greatest event coordinate `<= src` with a [`PredecessorIndex`] and asks
//! that version for the best interval containing `dst`.

use std::cmp::Reverse;

use thiserror::Error;

use crate::model::{is_laminar, Address, AddressRange, ModelError, Packet, Priority, RuleId, RuleSet};
use crate::persistent::{
    IntervalId, PredecessorIndex, PrioInterval, StoreError, StoreMode, Version, VersionedIntervalStore,
};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("laminar mode needs nested-or-disjoint source and destination ranges")]
    NotLaminar,
    #[error("packet ({src}, {dst}) outside the {bits}-bit universe")]
    PacketOutOfUniverse { src: Address, dst: Address, bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BuildMode {
    /// Laminar when both the source and destination families are.
    #[default]
    Auto,
    General,
    Laminar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Delete,
    Insert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweepEvent {
    pub x: Address,
    pub kind: EventKind,
    pub rule: RuleId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatchResult {
    pub rule: RuleId,
    pub priority: Priority,
    /// Whether another rule containing the packet has the same priority;
    /// `None` unless requested.
    pub tie_possible: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifierStats {
    pub mode: StoreMode,
    pub k: u32,
    pub events: usize,
    pub event_coords: usize,
    /// Store versions including the empty version 0.
    pub versions: usize,
    pub blocks: usize,
    pub predecessor_blocks: usize,
    pub bytes_estimate: usize,
    /// Blocks a query may visit in the store (the predecessor lookup adds the
    /// same number again).
    pub max_query_path: u32,
}

#[derive(Debug, Clone)]
pub struct PacketClassifier {
    universe_bits: u32,
    events: usize,
    event_coords: Vec<Address>,
    version_at: Vec<Version>,
    store: VersionedIntervalStore,
    pred: PredecessorIndex,
}

/// Sweep events in application order.
///
/// At equal `x` deletes come first. Inserts put wider source ranges first and
/// deletes mirror that, so on a laminar source family the events nest like
/// brackets.
pub fn sweep_events(rs: &RuleSet) -> Vec<SweepEvent> {
    let max = rs.max_address();
    let mut events: Vec<SweepEvent> = Vec::with_capacity(2 * rs.len());
    for r in &rs.rules {
        events.push(SweepEvent {
            x: r.src.lo,
            kind: EventKind::Insert,
            rule: r.id,
        });
        if r.src.hi < max {
            events.push(SweepEvent {
                x: r.src.hi + 1,
                kind: EventKind::Delete,
                rule: r.id,
            });
        }
    }
    events.sort_unstable_by(|a, b| {
        let (ra, rb) = (rs.rule(a.rule), rs.rule(b.rule));
        (a.x, a.kind).cmp(&(b.x, b.kind)).then_with(|| match a.kind {
            EventKind::Insert => (Reverse(ra.src.hi), a.rule).cmp(&(Reverse(rb.src.hi), b.rule)),
            EventKind::Delete => (Reverse(ra.src.lo), Reverse(a.rule)).cmp(&(Reverse(rb.src.lo), Reverse(b.rule))),
        })
    });
    events
}

/// Whether `mode` resolves to the laminar store for this rule set.
pub fn resolve_mode(rs: &RuleSet, mode: BuildMode) -> Result<StoreMode, ClassifierError> {
    let laminar = || {
        let xs: Vec<AddressRange> = rs.rules.iter().map(|r| r.src).collect();
        let ys: Vec<AddressRange> = rs.rules.iter().map(|r| r.dst).collect();
        is_laminar(&xs) && is_laminar(&ys)
    };
    match mode {
        BuildMode::General => Ok(StoreMode::General),
        BuildMode::Laminar if laminar() => Ok(StoreMode::Laminar),
        BuildMode::Laminar => Err(ClassifierError::NotLaminar),
        BuildMode::Auto if laminar() => Ok(StoreMode::Laminar),
        BuildMode::Auto => Ok(StoreMode::General),
    }
}

pub fn build_classifier(rs: &RuleSet, k: u32, mode: BuildMode) -> Result<PacketClassifier, ClassifierError> {
    rs.ensure_valid()?;
    let mode = resolve_mode(rs, mode)?;
    let mut store = VersionedIntervalStore::new(rs.universe_bits, k, mode)?;
    store.set_check_laminar(false);

    let events = sweep_events(rs);
    let mut event_coords: Vec<Address> = Vec::new();
    let mut version_at: Vec<Version> = Vec::new();
    for e in &events {
        let r = rs.rule(e.rule);
        let version = match (e.kind, mode) {
            (EventKind::Insert, StoreMode::General) => store.insert(interval(r.id, r.dst, r.priority))?,
            (EventKind::Insert, StoreMode::Laminar) => store.insert_laminar(interval(r.id, r.dst, r.priority))?,
            (EventKind::Delete, StoreMode::General) => store.delete(r.id as IntervalId)?,
            (EventKind::Delete, StoreMode::Laminar) => store.undo(r.id as IntervalId)?,
        };
        if event_coords.last() == Some(&e.x) {
            *version_at.last_mut().unwrap() = version;
        } else {
            event_coords.push(e.x);
            version_at.push(version);
        }
    }
    let pred = PredecessorIndex::build(&event_coords, rs.universe_bits, k)?;
    Ok(PacketClassifier {
        universe_bits: rs.universe_bits,
        events: events.len(),
        event_coords,
        version_at,
        store,
        pred,
    })
}

fn interval(id: RuleId, dst: AddressRange, priority: Priority) -> PrioInterval {
    PrioInterval::new(id as IntervalId, dst.lo, dst.hi, priority, id)
}

impl PacketClassifier {
    /// Best rule containing `pkt` under (priority, lower id first).
    pub fn classify(&self, pkt: Packet) -> Result<Option<MatchResult>, ClassifierError> {
        self.lookup(pkt, false)
    }

    /// As [`classify`](Self::classify), also filling in `tie_possible`.
    pub fn classify_with_ties(&self, pkt: Packet) -> Result<Option<MatchResult>, ClassifierError> {
        self.lookup(pkt, true)
    }

    #[inline]
    fn lookup(&self, pkt: Packet, ties: bool) -> Result<Option<MatchResult>, ClassifierError> {
        let out_of_universe = || ClassifierError::PacketOutOfUniverse {
            src: pkt.src,
            dst: pkt.dst,
            bits: self.universe_bits,
        };
        let Some((_, rank)) = self.pred.predecessor_rank(pkt.src).map_err(|_| out_of_universe())? else {
            return Ok(None);
        };
        let trace = self
            .store
            .query_traced(self.version_at[rank], pkt.dst)
            .map_err(|_| out_of_universe())?;
        Ok(trace.best.map(|iv| MatchResult {
            rule: iv.payload,
            priority: iv.priority,
            tie_possible: ties.then_some(trace.tie),
        }))
    }

    /// Classifies a batch, splitting it across `threads` workers.
    pub fn classify_batch(&self, packets: &[Packet], threads: usize) -> Result<Vec<Option<MatchResult>>, ClassifierError> {
        let threads = threads.max(1);
        if threads == 1 || packets.len() < 2 * threads {
            return packets.iter().map(|&p| self.classify(p)).collect();
        }
        let chunk = packets.len().div_ceil(threads);
        let parts: Vec<Result<Vec<_>, ClassifierError>> = std::thread::scope(|s| {
            let handles: Vec<_> = packets
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(|&p| self.classify(p)).collect()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("classify worker panicked")).collect()
        });
        let mut out = Vec::with_capacity(packets.len());
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }

    pub fn event_coords(&self) -> &[Address] {
        &self.event_coords
    }

    /// Store version in effect at event coordinate `event_coords()[i]`.
    pub fn version_at(&self, i: usize) -> Version {
        self.version_at[i]
    }

    pub fn store(&self) -> &VersionedIntervalStore {
        &self.store
    }

    pub fn stats(&self) -> ClassifierStats {
        classifier_stats(self)
    }
}

pub fn classifier_stats(c: &PacketClassifier) -> ClassifierStats {
    ClassifierStats {
        mode: c.store.mode(),
        k: c.store.k(),
        events: c.events,
        event_coords: c.event_coords.len(),
        versions: c.store.version_count(),
        blocks: c.store.block_count(),
        predecessor_blocks: c.pred.store().block_count(),
        bytes_estimate: c.store.bytes_estimate() + c.pred.store().bytes_estimate(),
        max_query_path: c.store.path_length(),
    }
}
