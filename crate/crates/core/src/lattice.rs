//! Half-plane lattice primitives.
//!
//! Vertices live in `ℤ × ℕ*` (so `y >= 1`). Rectangles are open real
//! rectangles; a rectangle is discretized by keeping the lattice points
//! strictly inside it. Loops are rooted nearest-neighbour cycles, and every
//! geometric predicate on them ignores the choice of root.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The exterior rectangle `(0,6) × (0,3)` of a special crossing event.
pub const Q_EXT: RealRect = RealRect { x_min: 0.0, x_max: 6.0, y_min: 0.0, y_max: 3.0 };
/// The interior rectangle `(1,5) × (1,2)`.
pub const Q_INT: RealRect = RealRect { x_min: 1.0, x_max: 5.0, y_min: 1.0, y_max: 2.0 };

/// A vertex of the half-plane lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

impl Vertex {
    /// Panics if `y < 1`; use [`Vertex::try_new`] for untrusted input.
    pub fn new(x: i32, y: i32) -> Self {
        assert!(y >= 1, "vertex ({x},{y}) is below the half-plane");
        Self { x, y }
    }

    pub fn try_new(x: i32, y: i32) -> Result<Self> {
        if y >= 1 {
            Ok(Self { x, y })
        } else {
            Err(Error::Geometry(format!("vertex ({x},{y}) has y < 1")))
        }
    }

    #[inline]
    pub fn is_neighbour(&self, other: &Vertex) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    #[inline]
    pub fn linf(&self, other: &Vertex) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    /// Neighbours on ℤ², including a possible one at `y = 0`.
    #[inline]
    pub fn raw_neighbours(&self) -> [(i32, i32); 4] {
        [
            (self.x + 1, self.y),
            (self.x - 1, self.y),
            (self.x, self.y + 1),
            (self.x, self.y - 1),
        ]
    }
}

/// Lexicographic order: `y` first, then `x`.
impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// An open real rectangle `(x_min, x_max) × (y_min, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealRect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RealRect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(Error::Geometry(format!(
                "degenerate rectangle ({x_min},{x_max})x({y_min},{y_max})"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn scaled(&self, n: f64) -> Self {
        Self {
            x_min: self.x_min * n,
            x_max: self.x_max * n,
            y_min: self.y_min * n,
            y_max: self.y_max * n,
        }
    }

    pub fn contains_rect(&self, other: &RealRect) -> bool {
        self.x_min <= other.x_min
            && other.x_max <= self.x_max
            && self.y_min <= other.y_min
            && other.y_max <= self.y_max
    }

    /// Lattice points strictly inside `scale · self`, intersected with the
    /// half-plane, as an inclusive integer box. `None` when empty.
    pub fn lattice_box(&self, scale: u32) -> Option<IntBox> {
        let s = self.scaled(scale as f64);
        let x0 = s.x_min.floor() as i64 + 1;
        let x1 = s.x_max.ceil() as i64 - 1;
        let y0 = (s.y_min.floor() as i64 + 1).max(1);
        let y1 = s.y_max.ceil() as i64 - 1;
        if x0 > x1 || y0 > y1 {
            return None;
        }
        Some(IntBox { x0: x0 as i32, x1: x1 as i32, y0: y0 as i32, y1: y1 as i32 })
    }
}

/// An inclusive integer box `[x0,x1] × [y0,y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntBox {
    pub x0: i32,
    pub x1: i32,
    pub y0: i32,
    pub y1: i32,
}

impl IntBox {
    pub fn around(v: Vertex) -> Self {
        Self { x0: v.x, x1: v.x, y0: v.y, y1: v.y }
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        self.x0 <= v.x && v.x <= self.x1 && self.y0 <= v.y && v.y <= self.y1
    }

    #[inline]
    pub fn contains_box(&self, other: &IntBox) -> bool {
        self.x0 <= other.x0 && other.x1 <= self.x1 && self.y0 <= other.y0 && other.y1 <= self.y1
    }

    #[inline]
    pub fn intersects(&self, other: &IntBox) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    #[inline]
    pub fn include(&mut self, v: Vertex) {
        self.x0 = self.x0.min(v.x);
        self.x1 = self.x1.max(v.x);
        self.y0 = self.y0.min(v.y);
        self.y1 = self.y1.max(v.y);
    }

    pub fn union(&self, other: &IntBox) -> IntBox {
        IntBox {
            x0: self.x0.min(other.x0),
            x1: self.x1.max(other.x1),
            y0: self.y0.min(other.y0),
            y1: self.y1.max(other.y1),
        }
    }

    pub fn width(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0 + 1) as usize
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// L∞ diameter of the box.
    pub fn linf_diameter(&self) -> i32 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    /// Row-major index of `v`, which must lie in the box.
    #[inline]
    pub fn offset(&self, v: Vertex) -> usize {
        (v.y - self.y0) as usize * self.width() + (v.x - self.x0) as usize
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Vertex { x, y }))
    }
}

/// A finite set of half-plane vertices.
///
/// Vertices are kept sorted lexicographically (`y` then `x`); membership is
/// answered through a dense index over the bounding box.
#[derive(Clone, PartialEq, Eq)]
pub struct Region {
    vertices: Vec<Vertex>,
    bbox: Option<IntBox>,
    // position+1 in `vertices`, 0 when absent
    slots: Vec<u32>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("len", &self.vertices.len())
            .field("bbox", &self.bbox)
            .finish()
    }
}

impl Region {
    pub fn empty() -> Self {
        Self { vertices: Vec::new(), bbox: None, slots: Vec::new() }
    }

    pub fn from_vertices<I: IntoIterator<Item = Vertex>>(iter: I) -> Result<Self> {
        let set: BTreeSet<Vertex> = iter.into_iter().collect();
        if let Some(v) = set.iter().find(|v| v.y < 1) {
            return Err(Error::Geometry(format!("region vertex {v} has y < 1")));
        }
        Ok(Self::from_sorted(set.into_iter().collect()))
    }

    fn from_sorted(vertices: Vec<Vertex>) -> Self {
        let Some(first) = vertices.first() else {
            return Self::empty();
        };
        let mut bbox = IntBox::around(*first);
        for v in &vertices {
            bbox.include(*v);
        }
        let mut slots = vec![0u32; bbox.area()];
        for (i, v) in vertices.iter().enumerate() {
            slots[bbox.offset(*v)] = i as u32 + 1;
        }
        Self { vertices, bbox: Some(bbox), slots }
    }

    pub fn from_box(b: IntBox) -> Self {
        Self::from_sorted(b.vertices().filter(|v| v.y >= 1).collect())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn bbox(&self) -> Option<IntBox> {
        self.bbox
    }

    #[inline]
    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        let b = self.bbox?;
        if !b.contains(v) {
            return None;
        }
        match self.slots[b.offset(v)] {
            0 => None,
            s => Some(s as usize - 1),
        }
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        self.index_of(v).is_some()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.vertices.iter().all(|v| other.contains(*v))
    }

    pub fn without(&self, v: Vertex) -> Region {
        Self::from_sorted(self.vertices.iter().copied().filter(|w| *w != v).collect())
    }

    /// True when the region is exactly the lattice points of its bounding box.
    pub fn is_box(&self) -> bool {
        self.bbox.is_some_and(|b| b.area() == self.vertices.len())
    }

    /// Unordered nearest-neighbour pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            for w in [Vertex { x: v.x + 1, y: v.y }, Vertex { x: v.x, y: v.y + 1 }] {
                if let Some(j) = self.index_of(w) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Stable 64-bit content hash (SHA-256 prefix) of the sorted vertex list.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for v in &self.vertices {
            h.update(v.x.to_le_bytes());
            h.update(v.y.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Vertices strictly inside `scale · rect`, with `y >= 1`.
pub fn rect_region(rect: &RealRect, scale: u32) -> Region {
    match rect.lattice_box(scale) {
        Some(b) => Region::from_box(b),
        None => Region::empty(),
    }
}

/// Quarter-turn rotation `(x,y) ↦ (−y,x)` (optional) followed by translation.
pub fn transform_rect(rect: &RealRect, rotate_quarter: bool, translation: (f64, f64)) -> RealRect {
    let (tx, ty) = translation;
    if rotate_quarter {
        RealRect {
            x_min: -rect.y_max + tx,
            x_max: -rect.y_min + tx,
            y_min: rect.x_min + ty,
            y_max: rect.x_max + ty,
        }
    } else {
        RealRect {
            x_min: rect.x_min + tx,
            x_max: rect.x_max + tx,
            y_min: rect.y_min + ty,
            y_max: rect.y_max + ty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// An open segment on an axis-parallel line.
///
/// `Vertical`: `{line} × (a, b)`. `Horizontal`: `(a, b) × {line}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub orientation: Orientation,
    pub line: f64,
    pub a: f64,
    pub b: f64,
}

impl Segment {
    pub fn vertical(x: f64, a: f64, b: f64) -> Self {
        debug_assert!(a < b);
        Self { orientation: Orientation::Vertical, line: x, a, b }
    }

    pub fn horizontal(y: f64, a: f64, b: f64) -> Self {
        debug_assert!(a < b);
        Self { orientation: Orientation::Horizontal, line: y, a, b }
    }

    pub fn scaled(&self, n: f64) -> Self {
        Self { line: self.line * n, a: self.a * n, b: self.b * n, ..*self }
    }

    /// Same convention as [`transform_rect`].
    pub fn transformed(&self, rotate_quarter: bool, translation: (f64, f64)) -> Self {
        let (tx, ty) = translation;
        match (rotate_quarter, self.orientation) {
            (false, Orientation::Vertical) => Self::vertical(self.line + tx, self.a + ty, self.b + ty),
            (false, Orientation::Horizontal) => {
                Self::horizontal(self.line + ty, self.a + tx, self.b + tx)
            }
            // (c, t) -> (-t, c)
            (true, Orientation::Vertical) => Self::horizontal(self.line + ty, -self.b + tx, -self.a + tx),
            // (t, c) -> (-c, t)
            (true, Orientation::Horizontal) => Self::vertical(-self.line + tx, self.a + ty, self.b + ty),
        }
    }

    /// Whether vertex `v` lies on `scale · self`.
    #[inline]
    pub fn contains_vertex(&self, v: Vertex, scale: f64) -> bool {
        let (on, along) = match self.orientation {
            Orientation::Vertical => (v.x as f64, v.y as f64),
            Orientation::Horizontal => (v.y as f64, v.x as f64),
        };
        on == self.line * scale && self.a * scale < along && along < self.b * scale
    }

    /// Lattice bounding box of the vertices on the segment (possibly `None`).
    pub fn lattice_box(&self, scale: f64) -> Option<IntBox> {
        let line = self.line * scale;
        if line.fract() != 0.0 {
            return None;
        }
        let lo = (self.a * scale).floor() as i32 + 1;
        let hi = (self.b * scale).ceil() as i32 - 1;
        if lo > hi {
            return None;
        }
        let c = line as i32;
        Some(match self.orientation {
            Orientation::Vertical => IntBox { x0: c, x1: c, y0: lo, y1: hi },
            Orientation::Horizontal => IntBox { x0: lo, x1: hi, y0: c, y1: c },
        })
    }
}

/// A rooted closed nearest-neighbour path `z_0 → … → z_{n−1} → z_0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteLoop {
    vertices: Vec<Vertex>,
    bbox: IntBox,
}

impl DiscreteLoop {
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        let n = vertices.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidLoop(format!("loop has {n} jumps; need an even number >= 2")));
        }
        if let Some(v) = vertices.iter().find(|v| v.y < 1) {
            return Err(Error::InvalidLoop(format!("loop visits {v} outside the half-plane")));
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if !a.is_neighbour(&b) {
                return Err(Error::InvalidLoop(format!("jump {a} -> {b} is not a lattice step")));
            }
        }
        Ok(Self::from_checked(vertices))
    }

    /// Builds a loop from a root and step deltas; the steps must close up.
    pub fn from_steps(root: Vertex, steps: &[(i32, i32)]) -> Result<Self> {
        let mut vertices = Vec::with_capacity(steps.len());
        let mut cur = root;
        for &(dx, dy) in steps {
            vertices.push(cur);
            cur = Vertex { x: cur.x + dx, y: cur.y + dy };
        }
        if cur != root {
            return Err(Error::InvalidLoop("steps do not return to the root".into()));
        }
        Self::new(vertices)
    }

    /// Caller guarantees the loop invariants.
    pub(crate) fn from_checked(vertices: Vec<Vertex>) -> Self {
        debug_assert!(vertices.len() >= 2 && vertices.len().is_multiple_of(2));
        let mut bbox = IntBox::around(vertices[0]);
        for v in &vertices[1..] {
            bbox.include(*v);
        }
        Self { vertices, bbox }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn root(&self) -> Vertex {
        self.vertices[0]
    }

    /// Number of jumps `s_γ`.
    pub fn jumps(&self) -> usize {
        self.vertices.len()
    }

    pub fn bbox(&self) -> IntBox {
        self.bbox
    }

    /// Step deltas `z_{j+1} − z_j`, cyclically.
    pub fn steps(&self) -> Vec<(i32, i32)> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                (b.x - a.x, b.y - a.y)
            })
            .collect()
    }

    /// Distinct visited vertices, sorted.
    pub fn range(&self) -> Vec<Vertex> {
        let mut r = self.vertices.clone();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn rerooted(&self, k: usize) -> Self {
        let mut v = self.vertices.clone();
        v.rotate_left(k % self.vertices.len());
        Self { vertices: v, bbox: self.bbox }
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v[1..].reverse();
        Self { vertices: v, bbox: self.bbox }
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Result<Self> {
        Self::new(self.vertices.iter().map(|v| Vertex { x: v.x + dx, y: v.y + dy }).collect())
    }
}

/// L∞ diameter of the visited vertex set.
pub fn loop_diameter(l: &DiscreteLoop) -> f64 {
    l.bbox().linf_diameter() as f64
}

/// Whether the loop visits a vertex of `scale · seg`.
pub fn loop_hits_segment(l: &DiscreteLoop, seg: &Segment, scale: u32) -> bool {
    let s = scale as f64;
    match seg.lattice_box(s) {
        Some(b) if b.intersects(&l.bbox()) => l.vertices().iter().any(|v| seg.contains_vertex(*v, s)),
        _ => false,
    }
}

pub fn loop_contained(l: &DiscreteLoop, region: &Region) -> bool {
    match region.bbox() {
        Some(b) if b.contains_box(&l.bbox()) => {
            region.is_box() || l.vertices().iter().all(|v| region.contains(*v))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: i32, y: i32) -> Vertex {
        Vertex::new(x, y)
    }

    fn lp(vs: &[(i32, i32)]) -> DiscreteLoop {
        DiscreteLoop::new(vs.iter().map(|&(x, y)| v(x, y)).collect()).unwrap()
    }

    #[test]
    fn rect_region_examples() {
        let r = rect_region(&Q_EXT, 1);
        assert_eq!(r.len(), 10);
        let expected: Vec<Vertex> =
            (1..=2).flat_map(|y| (1..=5).map(move |x| v(x, y))).collect();
        assert_eq!(r.vertices(), &expected[..]);

        assert!(rect_region(&Q_INT, 1).is_empty());

        let r = rect_region(&Q_INT, 2);
        assert_eq!(r.len(), 7);
        assert!(r.vertices().iter().all(|w| w.y == 3 && (3..=9).contains(&w.x)));
    }

    #[test]
    fn rect_region_clips_to_half_plane() {
        let r = rect_region(&RealRect::new(-2.0, 2.0, -3.0, 2.0).unwrap(), 1);
        assert!(r.vertices().iter().all(|w| w.y == 1));
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn transform_rect_examples() {
        assert_eq!(
            transform_rect(&Q_EXT, true, (0.0, 0.0)),
            RealRect::new(-3.0, 0.0, 0.0, 6.0).unwrap()
        );
        assert_eq!(
            transform_rect(&Q_EXT, false, (3.0, 3.0)),
            RealRect::new(3.0, 9.0, 3.0, 6.0).unwrap()
        );
        assert_eq!(
            transform_rect(&Q_INT, true, (6.0, 0.0)),
            RealRect::new(4.0, 5.0, 1.0, 5.0).unwrap()
        );
    }

    #[test]
    fn segment_rotation_matches_point_rotation() {
        // {1} x (1,2) rotated: (1,t) -> (-t,1)
        let s = Segment::vertical(1.0, 1.0, 2.0).transformed(true, (0.0, 0.0));
        assert_eq!(s, Segment::horizontal(1.0, -2.0, -1.0));
        // (1,2) x {2} rotated: (t,2) -> (-2,t)
        let s = Segment::horizontal(2.0, 1.0, 2.0).transformed(true, (0.0, 0.0));
        assert_eq!(s, Segment::vertical(-2.0, 1.0, 2.0));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(loop_diameter(&lp(&[(0, 1), (1, 1)])), 1.0);
        assert_eq!(loop_diameter(&lp(&[(0, 1), (1, 1), (1, 2), (0, 2)])), 1.0);
        let mut path = vec![];
        for x in 0..5 {
            path.push((x, 1));
        }
        path.push((5, 1));
        path.push((5, 2));
        path.push((5, 3));
        path.push((5, 2));
        path.push((5, 1));
        for x in (1..5).rev() {
            path.push((x, 1));
        }
        assert!(loop_diameter(&lp(&path)) >= 5.0);
    }

    #[test]
    fn segment_hits() {
        let seg = Segment::vertical(1.0, 1.0, 2.0);
        let a = lp(&[(8, 10), (9, 10)]);
        assert!(loop_hits_segment(&a, &seg, 8));
        let b = lp(&[(8, 8), (9, 8)]);
        assert!(!loop_hits_segment(&b, &seg, 8));
        let c = lp(&[(16, 10), (17, 10)]);
        assert!(!loop_hits_segment(&c, &seg, 8));
    }

    #[test]
    fn containment() {
        let l = lp(&[(0, 1), (1, 1)]);
        let both = Region::from_vertices([v(0, 1), v(1, 1), v(2, 1)]).unwrap();
        assert!(loop_contained(&l, &both));
        let missing = Region::from_vertices([v(0, 1), v(2, 1)]).unwrap();
        assert!(!loop_contained(&l, &missing));
        assert!(!loop_contained(&l, &Region::empty()));
    }

    #[test]
    fn invalid_loops_rejected() {
        assert!(DiscreteLoop::new(vec![v(0, 1)]).is_err());
        assert!(DiscreteLoop::new(vec![v(0, 1), v(2, 1)]).is_err());
        assert!(DiscreteLoop::new(vec![v(0, 1), v(1, 1), v(1, 2)]).is_err());
        assert!(DiscreteLoop::from_steps(v(0, 1), &[(1, 0), (1, 0)]).is_err());
        assert!(Vertex::try_new(0, 0).is_err());
    }

    fn arb_loop() -> impl Strategy<Value = DiscreteLoop> {
        (
            -5i32..5,
            1i32..6,
            proptest::collection::vec(0u8..4, 1..20),
        )
            .prop_map(|(x, y, half)| {
                // walk out then retrace: always closed, stays in y >= 1 by reflection
                let mut pts = vec![Vertex { x, y }];
                let mut cur = Vertex { x, y };
                for d in &half {
                    let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][*d as usize];
                    let mut nxt = Vertex { x: cur.x + dx, y: cur.y + dy };
                    if nxt.y < 1 {
                        nxt.y = cur.y + 1;
                    }
                    pts.push(nxt);
                    cur = nxt;
                }
                let back: Vec<Vertex> = pts[1..pts.len() - 1].iter().rev().copied().collect();
                pts.extend(back);
                DiscreteLoop::new(pts).unwrap()
            })
    }

    proptest! {
        #[test]
        fn predicates_ignore_rooting(l in arb_loop(), k in 0usize..40, cx in -3i32..6, y0 in 0i32..5) {
            let r = l.rerooted(k);
            let rev = l.reversed();
            prop_assert_eq!(loop_diameter(&l), loop_diameter(&r));
            prop_assert_eq!(loop_diameter(&l), loop_diameter(&rev));
            let seg = Segment::vertical(cx as f64, y0 as f64, y0 as f64 + 2.0);
            prop_assert_eq!(loop_hits_segment(&l, &seg, 1), loop_hits_segment(&r, &seg, 1));
            prop_assert_eq!(loop_hits_segment(&l, &seg, 1), loop_hits_segment(&rev, &seg, 1));
            let region = Region::from_box(IntBox { x0: -3, x1: 3, y0: 1, y1: 4 });
            prop_assert_eq!(loop_contained(&l, &region), loop_contained(&r, &region));
            prop_assert_eq!(loop_contained(&l, &region), loop_contained(&rev, &region));
        }

        #[test]
        fn rect_region_monotone(a in 0.0f64..3.0, b in 3.5f64..8.0, c in 0.0f64..2.0, d in 2.5f64..6.0,
                                grow in 0.0f64..2.0, n in 1u32..5) {
            let small = RealRect::new(a, b, c, d).unwrap();
            let big = RealRect::new(a - grow, b + grow, c - grow, d + grow).unwrap();
            prop_assert!(rect_region(&small, n).is_subset(&rect_region(&big, n)));
        }

        #[test]
        fn rect_region_doubling(a in -4i32..4, w in 1i32..5, c in 0i32..3, h in 1i32..4, n in 1u32..4) {
            let q = RealRect::new(a as f64, (a + w) as f64, c as f64, (c + h) as f64).unwrap();
            let fine = rect_region(&q, 2 * n);
            for v in rect_region(&q, n).vertices() {
                prop_assert!(fine.contains(Vertex::new(2 * v.x, 2 * v.y)));
            }
        }
    }
}
