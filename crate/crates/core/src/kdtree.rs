//! Median-split kD-tree over corner points.
//!
//! Cells are closed integer rectangles. A split at coordinate `s` produces
//! `[lo, s]` and `[s, hi]`, so siblings share the split line. Splitting stops
//! once no point lies strictly inside a cell, which makes every rectangle
//! whose corners are input points either cover a leaf, miss its interior, or
//! span the leaf's full width or height.

use crate::model::{max_address, Address, AddressRange, Rect};

pub type Point = (Address, Address);
pub type CellId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn at_depth(depth: u32) -> Self {
        if depth.is_multiple_of(2) {
            Axis::X
        } else {
            Axis::Y
        }
    }

    fn of(self, p: Point) -> Address {
        match self {
            Axis::X => p.0,
            Axis::Y => p.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RectRelation {
    Disjoint,
    Crosses,
    Covers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KdCell {
    pub rect: Rect,
    pub depth: u32,
    pub split: Option<(Axis, Address)>,
    pub children: Option<(CellId, CellId)>,
}

impl KdCell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Whether `p` lies in the open interior.
    pub fn strictly_contains(&self, p: Point) -> bool {
        open_contains(&self.rect, p)
    }
}

fn open_contains(r: &Rect, p: Point) -> bool {
    r.x.lo < p.0 && p.0 < r.x.hi && r.y.lo < p.1 && p.1 < r.y.hi
}

/// Relation of a closed rectangle `r` to a cell, where "crosses" means `r`
/// meets the cell's open interior without containing the cell.
pub fn classify_rect(cell: &Rect, r: &Rect) -> RectRelation {
    if r.x.contains_range(&cell.x) && r.y.contains_range(&cell.y) {
        RectRelation::Covers
    } else if open_meets(&cell.x, &r.x) && open_meets(&cell.y, &r.y) {
        RectRelation::Crosses
    } else {
        RectRelation::Disjoint
    }
}

/// Whether the open interval `(cell.lo, cell.hi)` meets the closed `r`.
#[inline]
fn open_meets(cell: &AddressRange, r: &AddressRange) -> bool {
    cell.lo < cell.hi && r.lo < cell.hi && r.hi > cell.lo
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RectCellCounts {
    pub crossed: usize,
    pub maximal_covered: usize,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    cells: Vec<KdCell>,
    points: usize,
    max_depth: u32,
}

/// Builds a tree whose root is the whole `universe_bits` plane.
pub fn build_kdtree(points: &[Point], universe_bits: u32) -> KdTree {
    let u = AddressRange::new(0, max_address(universe_bits));
    KdTree::with_bounds(points, Rect::new(u, u))
}

impl KdTree {
    /// Builds a tree rooted at `bounds`. Points outside `bounds` never lie in
    /// any cell interior and are ignored.
    pub fn with_bounds(points: &[Point], bounds: Rect) -> Self {
        let mut pts: Vec<Point> = points
            .iter()
            .copied()
            .filter(|&p| open_contains(&bounds, p))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        let mut tree = KdTree {
            cells: Vec::with_capacity(2 * pts.len() + 1),
            points: pts.len(),
            max_depth: 0,
        };
        tree.cells.push(KdCell {
            rect: bounds,
            depth: 0,
            split: None,
            children: None,
        });
        tree.split(0, &mut pts);
        tree
    }

    /// `pts` are exactly the points strictly inside the cell.
    fn split(&mut self, id: CellId, pts: &mut [Point]) {
        if pts.is_empty() {
            return;
        }
        let cell = self.cells[id as usize];
        let axis = Axis::at_depth(cell.depth);
        let mid = (pts.len() - 1) / 2;
        let (_, &mut median, _) = pts.select_nth_unstable_by_key(mid, |&p| axis.of(p));
        let s = axis.of(median);
        let (lo_rect, hi_rect) = match axis {
            Axis::X => (
                Rect::new(AddressRange::new(cell.rect.x.lo, s), cell.rect.y),
                Rect::new(AddressRange::new(s, cell.rect.x.hi), cell.rect.y),
            ),
            Axis::Y => (
                Rect::new(cell.rect.x, AddressRange::new(cell.rect.y.lo, s)),
                Rect::new(cell.rect.x, AddressRange::new(s, cell.rect.y.hi)),
            ),
        };
        // Points on the split line belong to neither interior.
        let mut below = 0;
        for i in 0..pts.len() {
            if axis.of(pts[i]) < s {
                pts.swap(i, below);
                below += 1;
            }
        }
        let (left, rest) = pts.split_at_mut(below);
        let mut above = 0;
        for i in 0..rest.len() {
            if axis.of(rest[i]) > s {
                rest.swap(i, above);
                above += 1;
            }
        }
        let right = &mut rest[..above];

        let depth = cell.depth + 1;
        self.max_depth = self.max_depth.max(depth);
        let a = self.push(lo_rect, depth);
        let b = self.push(hi_rect, depth);
        let c = &mut self.cells[id as usize];
        c.split = Some((axis, s));
        c.children = Some((a, b));
        self.split(a, left);
        self.split(b, right);
    }

    fn push(&mut self, rect: Rect, depth: u32) -> CellId {
        self.cells.push(KdCell {
            rect,
            depth,
            split: None,
            children: None,
        });
        (self.cells.len() - 1) as CellId
    }

    pub fn root(&self) -> CellId {
        0
    }

    pub fn cell(&self, id: CellId) -> &KdCell {
        &self.cells[id as usize]
    }

    pub fn cells(&self) -> &[KdCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distinct points strictly inside the root.
    pub fn point_count(&self) -> usize {
        self.points
    }

    /// Depth of the deepest cell; the root has depth 0.
    pub fn depth(&self) -> u32 {
        self.max_depth
    }

    pub fn leaves(&self) -> impl Iterator<Item = &KdCell> + '_ {
        self.cells.iter().filter(|c| c.is_leaf())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    /// Cells at every level whose open interior meets the axis-parallel line
    /// `axis = coordinate` (a vertical line for `Axis::X`).
    pub fn cells_cut_by_line(&self, axis: Axis, coordinate: Address) -> usize {
        let cut = |c: &KdCell| {
            let (along, across) = match axis {
                Axis::X => (c.rect.x, c.rect.y),
                Axis::Y => (c.rect.y, c.rect.x),
            };
            along.lo < coordinate && coordinate < along.hi && across.lo < across.hi
        };
        let mut count = 0;
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let c = self.cell(id);
            if !cut(c) {
                continue;
            }
            count += 1;
            if let Some((a, b)) = c.children {
                stack.push(a);
                stack.push(b);
            }
        }
        count
    }

    /// Cells crossed by `r`, and covered cells whose parent is not covered.
    pub fn rect_cell_counts(&self, r: &Rect) -> RectCellCounts {
        let mut counts = RectCellCounts::default();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let c = self.cell(id);
            match classify_rect(&c.rect, r) {
                RectRelation::Disjoint => {}
                RectRelation::Covers => counts.maximal_covered += 1,
                RectRelation::Crosses => {
                    counts.crossed += 1;
                    if let Some((a, b)) = c.children {
                        stack.push(a);
                        stack.push(b);
                    }
                }
            }
        }
        counts
    }
}
