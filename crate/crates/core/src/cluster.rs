//! Loop clusters: connected components of the "visit a common vertex"
//! relation, via union-find.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};

use crate::lattice::{loop_hits_segment, DiscreteLoop, IntBox, Orientation, RealRect, Segment, Vertex};
use crate::sampler::LoopSoup;

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn push(&mut self) -> usize {
        let i = self.parent.len();
        self.parent.push(i as u32);
        self.size.push(1);
        i
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    /// Returns `(root, absorbed)` when two sets merge, `None` otherwise.
    pub fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
        Some((big, small))
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

/// Which loops visit each vertex.
#[derive(Debug, Clone, Default)]
pub struct OccupancyMap {
    map: HashMap<Vertex, Vec<usize>>,
}

impl OccupancyMap {
    pub fn build(loops: &[DiscreteLoop]) -> Self {
        let mut map: HashMap<Vertex, Vec<usize>> = HashMap::new();
        for (i, l) in loops.iter().enumerate() {
            for v in l.vertices() {
                let e = map.entry(*v).or_default();
                if e.last() != Some(&i) {
                    e.push(i);
                }
            }
        }
        Self { map }
    }

    pub fn loops_at(&self, v: Vertex) -> &[usize] {
        self.map.get(&v).map_or(&[], |x| x.as_slice())
    }

    pub fn vertex_count(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vertex, &Vec<usize>)> {
        self.map.iter()
    }
}

/// Dense "first loop seen here" table over a bounding box.
struct OwnerGrid {
    bbox: IntBox,
    owner: Vec<u32>,
}

const FREE: u32 = u32::MAX;

impl OwnerGrid {
    fn new(bbox: IntBox) -> Self {
        Self { bbox, owner: vec![FREE; bbox.area()] }
    }

    fn for_loops<L: Borrow<DiscreteLoop>>(loops: &[L]) -> Option<Self> {
        let mut it = loops.iter();
        let mut b = it.next()?.borrow().bbox();
        for l in it {
            b = b.union(&l.borrow().bbox());
        }
        Some(Self::new(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClusterStats {
    pub loop_count: usize,
    pub vertex_count: usize,
    /// L∞ diameter of the cluster's vertex set.
    pub diameter: i32,
    pub bbox: Option<IntBox>,
}

/// Partition of a soup's loops into clusters.
///
/// Cluster ids are assigned in order of each cluster's smallest loop index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    cluster_of: Vec<usize>,
    stats: Vec<ClusterStats>,
}

impl ClusterPartition {
    pub fn cluster_of(&self, loop_index: usize) -> usize {
        self.cluster_of[loop_index]
    }

    pub fn ids(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn cluster_count(&self) -> usize {
        self.stats.len()
    }

    pub fn stats(&self, id: usize) -> &ClusterStats {
        &self.stats[id]
    }

    pub fn all_stats(&self) -> &[ClusterStats] {
        &self.stats
    }

    /// Loop indices per cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.stats.len()];
        for (i, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

pub fn build_clusters(soup: &LoopSoup) -> ClusterPartition {
    cluster_loops(&soup.loops)
}

pub fn cluster_loops<L: Borrow<DiscreteLoop>>(loops: &[L]) -> ClusterPartition {
    let Some(mut grid) = OwnerGrid::for_loops(loops) else {
        return ClusterPartition { cluster_of: Vec::new(), stats: Vec::new() };
    };
    let mut uf = UnionFind::new(loops.len());
    for (i, l) in loops.iter().enumerate() {
        for v in l.borrow().vertices() {
            let slot = &mut grid.owner[grid.bbox.offset(*v)];
            if *slot == FREE {
                *slot = i as u32;
            } else if *slot as usize != i {
                uf.union(*slot as usize, i);
            }
        }
    }
    let mut id_of_root = vec![usize::MAX; loops.len()];
    let mut cluster_of = Vec::with_capacity(loops.len());
    let mut stats: Vec<ClusterStats> = Vec::new();
    for (i, l) in loops.iter().enumerate() {
        let l = l.borrow();
        let r = uf.find(i);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = stats.len();
            stats.push(ClusterStats::default());
        }
        let c = id_of_root[r];
        cluster_of.push(c);
        let s = &mut stats[c];
        s.loop_count += 1;
        s.bbox = Some(s.bbox.map_or(l.bbox(), |b| b.union(&l.bbox())));
    }
    for &owner in &grid.owner {
        if owner != FREE {
            stats[cluster_of[owner as usize]].vertex_count += 1;
        }
    }
    for s in &mut stats {
        s.diameter = s.bbox.map_or(0, |b| b.linf_diameter());
    }
    ClusterPartition { cluster_of, stats }
}

/// Ids of clusters with a loop visiting `scale · seg`.
pub fn clusters_touching_segment(
    partition: &ClusterPartition,
    soup: &LoopSoup,
    seg: &Segment,
    scale: u32,
) -> BTreeSet<usize> {
    let Some(seg_box) = seg.lattice_box(scale as f64) else {
        return BTreeSet::new();
    };
    let mut out = BTreeSet::new();
    for (i, l) in soup.loops.iter().enumerate() {
        let c = partition.cluster_of(i);
        if out.contains(&c) {
            continue;
        }
        if partition.stats(c).bbox.is_some_and(|b| b.intersects(&seg_box)) && loop_hits_segment(l, seg, scale) {
            out.insert(c);
        }
    }
    out
}

/// Per-loop side flags for a crossing of `rect_box` in `direction`: bit 0
/// for a vertex of the box on its first column (row), bit 1 for the last.
pub(crate) fn crossing_flags(l: &DiscreteLoop, rect_box: &IntBox, direction: Orientation) -> u8 {
    if !rect_box.intersects(&l.bbox()) {
        return 0;
    }
    let mut f = 0u8;
    for v in l.vertices() {
        if !rect_box.contains(*v) {
            continue;
        }
        let (c, lo, hi) = match direction {
            Orientation::Horizontal => (v.x, rect_box.x0, rect_box.x1),
            Orientation::Vertical => (v.y, rect_box.y0, rect_box.y1),
        };
        if c <= lo {
            f |= 1;
        }
        if c >= hi {
            f |= 2;
        }
        if f == 3 {
            break;
        }
    }
    f
}

/// Whether one cluster owns vertices of the discretized rectangle on both
/// of its extreme columns (`Horizontal`) or rows (`Vertical`).
pub fn cluster_crosses_rect(
    partition: &ClusterPartition,
    soup: &LoopSoup,
    rect: &RealRect,
    scale: u32,
    direction: Orientation,
) -> bool {
    let Some(b) = rect.lattice_box(scale) else {
        return false;
    };
    let mut flags = vec![0u8; partition.cluster_count()];
    for (i, l) in soup.loops.iter().enumerate() {
        let c = partition.cluster_of(i);
        flags[c] |= crossing_flags(l, &b, direction);
        if flags[c] == 3 {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct LargestCluster {
    pub loop_count: usize,
    pub vertex_count: usize,
    pub diameter: i32,
}

/// Cluster with the most vertices; ties go to the smallest id.
pub fn largest_cluster_stats(partition: &ClusterPartition) -> LargestCluster {
    let mut best: Option<&ClusterStats> = None;
    for s in partition.all_stats() {
        if best.is_none_or(|b| s.vertex_count > b.vertex_count) {
            best = Some(s);
        }
    }
    best.map_or_else(LargestCluster::default, |s| LargestCluster {
        loop_count: s.loop_count,
        vertex_count: s.vertex_count,
        diameter: s.diameter,
    })
}

/// Clusters grown one loop at a time, each set carrying OR-merged flags.
///
/// Used for intensity sweeps: loops are inserted in mark order and the
/// flags answer crossing queries after every insertion.
#[derive(Debug, Clone)]
pub struct IncrementalClusters {
    bbox: IntBox,
    owner: Vec<u32>,
    uf: UnionFind,
    flags: Vec<u8>,
    vertex_count: Vec<u32>,
    largest: u32,
    any_full: bool,
    full_mask: u8,
}

impl IncrementalClusters {
    /// `full_mask`: the flag combination that marks a crossing cluster.
    pub fn new(bbox: IntBox, full_mask: u8) -> Self {
        Self {
            bbox,
            owner: vec![FREE; bbox.area()],
            uf: UnionFind::new(0),
            flags: Vec::new(),
            vertex_count: Vec::new(),
            largest: 0,
            any_full: false,
            full_mask,
        }
    }

    /// Inserts a loop lying inside the box. Returns its index.
    pub fn insert(&mut self, l: &DiscreteLoop, flags: u8) -> usize {
        let i = self.uf.push();
        self.flags.push(flags);
        self.vertex_count.push(0);
        let mut fresh = 0u32;
        for v in l.vertices() {
            let slot = self.bbox.offset(*v);
            let o = self.owner[slot];
            if o == FREE {
                self.owner[slot] = i as u32;
                fresh += 1;
            } else if o as usize != i {
                let (ra, rb) = (self.uf.find(o as usize), self.uf.find(i));
                if let Some((root, gone)) = self.uf.union(ra, rb) {
                    self.flags[root] |= self.flags[gone];
                    self.vertex_count[root] += self.vertex_count[gone];
                }
            }
        }
        let r = self.uf.find(i);
        self.vertex_count[r] += fresh;
        self.largest = self.largest.max(self.vertex_count[r]);
        if self.full_mask != 0 && self.flags[r] & self.full_mask == self.full_mask {
            self.any_full = true;
        }
        i
    }

    pub fn has_full_cluster(&self) -> bool {
        self.any_full
    }

    pub fn largest_vertex_count(&self) -> usize {
        self.largest as usize
    }

    pub fn same_cluster(&mut self, a: usize, b: usize) -> bool {
        self.uf.find(a) == self.uf.find(b)
    }
}
