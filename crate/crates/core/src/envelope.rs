//! Lower envelopes of horizontal segments over a discrete domain, and the two
//! problems that reduce to it: offline min-priority-queue replay and
//! replacement edges for a path-shaped minimum spanning tree.
//!
//! The domain is positions `0..m`; gap `g` is the unit step between positions
//! `g` and `g + 1`. A segment `[x_lo, x_hi]` covers gaps `x_lo..x_hi`.
//!
//! Segments are processed in increasing `(weight, tie-break)` order. Each one
//! claims every gap in its span that no earlier segment claimed, then the
//! claimed gap is contracted in a union-find over positions, so later segments
//! jump straight over it. Every gap is claimed once.

use thiserror::Error;

pub type SegId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("segment {id}: [{x_lo}, {x_hi}] is inverted or outside domain of size {m}")]
    BadSegment {
        id: SegId,
        x_lo: usize,
        x_hi: usize,
        m: usize,
    },
    #[error("operation {index}: delete of {value}, which is not in the queue")]
    DeleteNotActive { index: usize, value: u64 },
    #[error("edge {index}: ({u}, {v}) needs 0 <= u < v < {n}")]
    BadEdge {
        index: usize,
        u: usize,
        v: usize,
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HSegment {
    pub id: SegId,
    pub x_lo: usize,
    pub x_hi: usize,
    pub weight: u64,
}

impl HSegment {
    pub fn new(id: SegId, x_lo: usize, x_hi: usize, weight: u64) -> Self {
        Self {
            id,
            x_lo,
            x_hi,
            weight,
        }
    }

    pub fn covers_gap(&self, gap: usize) -> bool {
        self.x_lo <= gap && gap < self.x_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvelopeCell {
    pub gap: usize,
    pub winner: Option<SegId>,
}

/// Two segments tie for the minimum on `gap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmbiguityReport {
    pub weight: u64,
    pub gap: usize,
    pub pair: (SegId, SegId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqOp {
    Insert(u64),
    Delete(u64),
    QueryMin,
}

/// A non-tree edge `(u, v)` of a graph whose minimum spanning tree is the path
/// `0 - 1 - ... - n-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEdge {
    pub u: usize,
    pub v: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    AscendingId,
    DescendingId,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnvelopeCounters {
    pub finds: u64,
    pub contractions: u64,
}

/// Union-find over path positions, tracking the rightmost position of each
/// contracted run.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    rightmost: Vec<u32>,
    finds: u64,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n < u32::MAX as usize);
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            rightmost: (0..n as u32).collect(),
            finds: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn finds(&self) -> u64 {
        self.finds
    }

    pub fn find(&mut self, x: usize) -> usize {
        self.finds += 1;
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Largest position in the run containing `x`.
    pub fn rightmost(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.rightmost[r] as usize
    }

    /// Merges the runs of `a` and `b`; returns false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let right = self.rightmost[ra].max(self.rightmost[rb]);
        let root = match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => {
                self.parent[ra] = rb as u32;
                rb
            }
            std::cmp::Ordering::Greater => {
                self.parent[rb] = ra as u32;
                ra
            }
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] = self.rank[ra].saturating_add(1);
                ra
            }
        };
        self.rightmost[root] = right;
        true
    }
}

fn check_segments(segments: &[HSegment], m: usize) -> Result<(), EnvelopeError> {
    for s in segments {
        if s.x_lo > s.x_hi || s.x_hi >= m {
            return Err(EnvelopeError::BadSegment {
                id: s.id,
                x_lo: s.x_lo,
                x_hi: s.x_hi,
                m,
            });
        }
    }
    Ok(())
}

/// Core sweep. `order` lists indices into `segments` in increasing
/// `(weight, tie-break)` order; the result holds, per gap, the index of the
/// first segment in that order covering it.
pub fn envelope_in_order(
    m: usize,
    segments: &[HSegment],
    order: impl IntoIterator<Item = usize>,
    counters: &mut EnvelopeCounters,
) -> Vec<Option<usize>> {
    let gaps = m.saturating_sub(1);
    let mut winner = vec![None; gaps];
    if gaps == 0 {
        return winner;
    }
    let mut uf = UnionFind::new(m);
    let mut remaining = gaps;
    for s in order {
        if remaining == 0 {
            break;
        }
        let seg = &segments[s];
        let mut v = seg.x_lo;
        while v < seg.x_hi {
            let right = uf.rightmost(v);
            if right >= seg.x_hi {
                break;
            }
            winner[right] = Some(s);
            uf.union(right, right + 1);
            counters.contractions += 1;
            remaining -= 1;
            v = right + 1;
        }
    }
    counters.finds += uf.finds();
    winner
}

fn sorted_order(segments: &[HSegment], tie: TieBreak) -> Vec<usize> {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    match tie {
        TieBreak::AscendingId => {
            order.sort_by_key(|&i| (segments[i].weight, segments[i].id));
        }
        TieBreak::DescendingId => {
            order.sort_by_key(|&i| (segments[i].weight, std::cmp::Reverse(segments[i].id)));
        }
    }
    order
}

/// Per-gap winner under the given tie-break, plus work counters.
pub fn lower_envelope_with(
    segments: &[HSegment],
    m: usize,
    tie: TieBreak,
) -> Result<(Vec<EnvelopeCell>, EnvelopeCounters), EnvelopeError> {
    check_segments(segments, m)?;
    let mut counters = EnvelopeCounters::default();
    let order = sorted_order(segments, tie);
    let winners = envelope_in_order(m, segments, order, &mut counters);
    let cells = winners
        .into_iter()
        .enumerate()
        .map(|(gap, w)| EnvelopeCell {
            gap,
            winner: w.map(|i| segments[i].id),
        })
        .collect();
    Ok((cells, counters))
}

/// Minimum-weight segment over every gap; equal weights go to the smaller id.
pub fn lower_envelope(segments: &[HSegment], m: usize) -> Result<Vec<EnvelopeCell>, EnvelopeError> {
    lower_envelope_with(segments, m, TieBreak::AscendingId).map(|(cells, _)| cells)
}

/// Every gap whose minimum is attained by two or more segments, found by
/// running the envelope with opposite tie-breaks and comparing.
pub fn envelope_ambiguities(
    segments: &[HSegment],
    m: usize,
) -> Result<Vec<AmbiguityReport>, EnvelopeError> {
    check_segments(segments, m)?;
    let mut counters = EnvelopeCounters::default();
    let asc = envelope_in_order(m, segments, sorted_order(segments, TieBreak::AscendingId), &mut counters);
    let desc = envelope_in_order(m, segments, sorted_order(segments, TieBreak::DescendingId), &mut counters);
    Ok(asc
        .iter()
        .zip(&desc)
        .enumerate()
        .filter_map(|(gap, (a, d))| match (a, d) {
            (Some(a), Some(d)) if a != d => Some(AmbiguityReport {
                weight: segments[*a].weight,
                gap,
                pair: (segments[*a].id, segments[*d].id),
            }),
            _ => None,
        })
        .collect())
}

/// The ambiguity with the smallest tied weight (lowest gap on equal weight).
/// With weights holding negated priorities this is the highest-priority tie.
pub fn envelope_ambiguity(
    segments: &[HSegment],
    m: usize,
) -> Result<Option<AmbiguityReport>, EnvelopeError> {
    Ok(envelope_ambiguities(segments, m)?
        .into_iter()
        .min_by_key(|a| (a.weight, a.gap)))
}

/// Answers every `QueryMin` of an offline operation sequence. The value
/// inserted at step `i` and deleted at step `j` is the segment `[i, j]` of
/// weight `value`; a query at step `q` reads gap `q`.
pub fn offline_min_queries(ops: &[PqOp]) -> Result<Vec<Option<u64>>, EnvelopeError> {
    let m = ops.len() + 1;
    let mut open: std::collections::HashMap<u64, Vec<usize>> = Default::default();
    let mut segments = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        match *op {
            PqOp::Insert(v) => open.entry(v).or_default().push(i),
            PqOp::Delete(v) => {
                let start = open
                    .get_mut(&v)
                    .and_then(Vec::pop)
                    .ok_or(EnvelopeError::DeleteNotActive { index: i, value: v })?;
                segments.push(HSegment::new(segments.len() as SegId, start, i, v));
            }
            PqOp::QueryMin => {}
        }
    }
    for (v, starts) in open {
        for start in starts {
            segments.push(HSegment::new(segments.len() as SegId, start, ops.len(), v));
        }
    }
    let cells = lower_envelope(&segments, m)?;
    Ok(ops
        .iter()
        .enumerate()
        .filter(|(_, op)| matches!(op, PqOp::QueryMin))
        .map(|(q, _)| cells[q].winner.map(|id| segments[id as usize].weight))
        .collect())
}

/// For every path edge `(i, i+1)`, the index in `edges` of the cheapest
/// non-tree edge spanning it (smallest index on equal weight).
pub fn path_replacements(path_n: usize, edges: &[PathEdge]) -> Result<Vec<Option<usize>>, EnvelopeError> {
    let mut segments = Vec::with_capacity(edges.len());
    for (index, e) in edges.iter().enumerate() {
        if e.u >= e.v || e.v >= path_n {
            return Err(EnvelopeError::BadEdge {
                index,
                u: e.u,
                v: e.v,
                n: path_n,
            });
        }
        segments.push(HSegment::new(index as SegId, e.u, e.v, e.weight));
    }
    let cells = lower_envelope(&segments, path_n)?;
    Ok(cells.into_iter().map(|c| c.winner.map(|id| id as usize)).collect())
}
