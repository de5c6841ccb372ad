//! Special crossing events on a block.
//!
//! With `Q_ext = (0,6)×(0,3)` and `Q_int = (1,5)×(1,2)`:
//!
//! * `C1`: a cluster `K1` of loops inside `Q_int`, joined by loops inside the
//!   band `(0,6)×(1,2)` to the segments `{1}×(1,2)` and `{5}×(1,2)`;
//! * `C2`: a cluster `K2` of loops inside `(1,2)²`, joined by loops inside
//!   `(1,2)×(0,3)` to `(1,2)×{1}` and `(1,2)×{2}`;
//! * `C3`: the same with `(4,5)×(1,2)` and `(4,5)×(0,3)`.
//!
//! A block is these rectangles scaled by `N`, optionally turned a quarter,
//! and translated. Only loops contained in the relevant rectangles matter,
//! so every event is a function of the loops contained in the exterior.

use serde::Serialize;

use crate::cluster::cluster_loops;
use crate::lattice::{loop_diameter, transform_rect, DiscreteLoop, IntBox, RealRect, Segment, Q_EXT, Q_INT};
use crate::sampler::LoopSoup;

/// A block: scale, orientation and lattice offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BlockSpec {
    pub scale: u32,
    pub rotate_quarter: bool,
    pub offset: (i64, i64),
}

/// One of the three cluster-crossing conditions, in lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingCondition {
    /// Rectangle whose loops form the candidate clusters.
    pub cluster_rect: RealRect,
    /// Rectangle whose loops may connect a cluster to the target segments.
    pub band_rect: RealRect,
    pub first: Segment,
    pub second: Segment,
}

impl BlockSpec {
    pub fn new(scale: u32, rotate_quarter: bool, offset: (i64, i64)) -> Self {
        Self { scale, rotate_quarter, offset }
    }

    /// The block at the origin, unrotated.
    pub fn canonical(scale: u32) -> Self {
        Self::new(scale, false, (0, 0))
    }

    fn place_rect(&self, r: &RealRect) -> RealRect {
        transform_rect(
            &r.scaled(self.scale as f64),
            self.rotate_quarter,
            (self.offset.0 as f64, self.offset.1 as f64),
        )
    }

    fn place_seg(&self, s: &Segment) -> Segment {
        s.scaled(self.scale as f64)
            .transformed(self.rotate_quarter, (self.offset.0 as f64, self.offset.1 as f64))
    }

    pub fn exterior(&self) -> RealRect {
        self.place_rect(&Q_EXT)
    }

    pub fn interior(&self) -> RealRect {
        self.place_rect(&Q_INT)
    }

    /// Lattice points of the exterior rectangle.
    pub fn exterior_box(&self) -> Option<IntBox> {
        self.exterior().lattice_box(1)
    }

    pub fn conditions(&self) -> [CrossingCondition; 3] {
        let r = |x0, x1, y0, y1| RealRect { x_min: x0, x_max: x1, y_min: y0, y_max: y1 };
        let c1 = CrossingCondition {
            cluster_rect: self.place_rect(&Q_INT),
            band_rect: self.place_rect(&r(0.0, 6.0, 1.0, 2.0)),
            first: self.place_seg(&Segment::vertical(1.0, 1.0, 2.0)),
            second: self.place_seg(&Segment::vertical(5.0, 1.0, 2.0)),
        };
        let square = |x0: f64| CrossingCondition {
            cluster_rect: self.place_rect(&r(x0, x0 + 1.0, 1.0, 2.0)),
            band_rect: self.place_rect(&r(x0, x0 + 1.0, 0.0, 3.0)),
            first: self.place_seg(&Segment::horizontal(1.0, x0, x0 + 1.0)),
            second: self.place_seg(&Segment::horizontal(2.0, x0, x0 + 1.0)),
        };
        [c1, square(1.0), square(4.0)]
    }
}

/// Outcome of one condition, with the loops that realise it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EventPart {
    pub satisfied: bool,
    /// Cluster loops followed by the connecting loop(s), as soup indices.
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EventWitness {
    pub c1: EventPart,
    pub c2: EventPart,
    pub c3: EventPart,
}

impl EventWitness {
    pub fn satisfied(&self) -> bool {
        self.c1.satisfied && self.c2.satisfied && self.c3.satisfied
    }

    /// Sorted, deduplicated union of the three witnesses.
    pub fn loops(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .c1
            .witness
            .iter()
            .chain(&self.c2.witness)
            .chain(&self.c3.witness)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

fn keeps(l: &DiscreteLoop, min_d: Option<f64>) -> bool {
    min_d.is_none_or(|d| loop_diameter(l) >= d)
}

/// Evaluates one condition against `loops` (loops outside the block are
/// ignored).
pub fn eval_condition(loops: &[DiscreteLoop], cond: &CrossingCondition, min_d: Option<f64>) -> EventPart {
    let (Some(cbox), Some(bbox)) = (cond.cluster_rect.lattice_box(1), cond.band_rect.lattice_box(1)) else {
        return EventPart::default();
    };
    let inner: Vec<usize> = loops
        .iter()
        .enumerate()
        .filter(|(_, l)| cbox.contains_box(&l.bbox()) && keeps(l, min_d))
        .map(|(i, _)| i)
        .collect();
    if inner.is_empty() {
        return EventPart::default();
    }
    let inner_loops: Vec<&DiscreteLoop> = inner.iter().map(|&i| &loops[i]).collect();
    let part = cluster_loops(&inner_loops);
    // cluster id per vertex of the cluster box (all loops at a vertex share it)
    let mut at = vec![u32::MAX; cbox.area()];
    for (k, l) in inner_loops.iter().enumerate() {
        let c = part.cluster_of(k) as u32;
        for v in l.vertices() {
            at[cbox.offset(*v)] = c;
        }
    }
    let nc = part.cluster_count();
    let mut first = vec![usize::MAX; nc];
    let mut second = vec![usize::MAX; nc];
    let seg_boxes = (cond.first.lattice_box(1.0), cond.second.lattice_box(1.0));
    let mut touched = Vec::new();
    for (i, l) in loops.iter().enumerate() {
        if !bbox.contains_box(&l.bbox()) || !keeps(l, min_d) {
            continue;
        }
        let near_a = seg_boxes.0.is_some_and(|b| b.intersects(&l.bbox()));
        let near_b = seg_boxes.1.is_some_and(|b| b.intersects(&l.bbox()));
        if !(near_a || near_b) || !cbox.intersects(&l.bbox()) {
            continue;
        }
        let hits_a = near_a && l.vertices().iter().any(|v| cond.first.contains_vertex(*v, 1.0));
        let hits_b = near_b && l.vertices().iter().any(|v| cond.second.contains_vertex(*v, 1.0));
        if !(hits_a || hits_b) {
            continue;
        }
        touched.clear();
        for v in l.vertices() {
            if cbox.contains(*v) {
                let c = at[cbox.offset(*v)];
                if c != u32::MAX {
                    touched.push(c as usize);
                }
            }
        }
        for &c in &touched {
            if hits_a && first[c] == usize::MAX {
                first[c] = i;
            }
            if hits_b && second[c] == usize::MAX {
                second[c] = i;
            }
        }
    }
    let Some(c) = (0..nc).find(|&c| first[c] != usize::MAX && second[c] != usize::MAX) else {
        return EventPart::default();
    };
    let mut witness: Vec<usize> = (0..inner.len()).filter(|&k| part.cluster_of(k) == c).map(|k| inner[k]).collect();
    for extra in [first[c], second[c]] {
        if !witness.contains(&extra) {
            witness.push(extra);
        }
    }
    EventPart { satisfied: true, witness }
}

pub fn eval_c1(soup: &LoopSoup, spec: &BlockSpec) -> EventPart {
    eval_condition(&soup.loops, &spec.conditions()[0], None)
}

pub fn eval_c2(soup: &LoopSoup, spec: &BlockSpec) -> EventPart {
    eval_condition(&soup.loops, &spec.conditions()[1], None)
}

pub fn eval_c3(soup: &LoopSoup, spec: &BlockSpec) -> EventPart {
    eval_condition(&soup.loops, &spec.conditions()[2], None)
}

/// `C1 ∧ C2 ∧ C3`, optionally on the loops of diameter `≥ min_d` only.
pub fn special_crossing_loops(loops: &[DiscreteLoop], spec: &BlockSpec, min_d: Option<f64>) -> EventWitness {
    let [a, b, c] = spec.conditions();
    let c1 = eval_condition(loops, &a, min_d);
    if !c1.satisfied {
        return EventWitness { c1, ..Default::default() };
    }
    let c2 = eval_condition(loops, &b, min_d);
    if !c2.satisfied {
        return EventWitness { c1, c2, ..Default::default() };
    }
    let c3 = eval_condition(loops, &c, min_d);
    EventWitness { c1, c2, c3 }
}

pub fn special_crossing(soup: &LoopSoup, spec: &BlockSpec) -> EventWitness {
    special_crossing_loops(&soup.loops, spec, None)
}

/// All three conditions evaluated, without the early exit.
pub fn crossing_events(soup: &LoopSoup, spec: &BlockSpec) -> EventWitness {
    EventWitness { c1: eval_c1(soup, spec), c2: eval_c2(soup, spec), c3: eval_c3(soup, spec) }
}
