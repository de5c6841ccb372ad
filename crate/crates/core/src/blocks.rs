//! Block edge percolation `ω^N`.
//!
//! The horizontal block edge `{(j,k),(j+1,k)}` is open when the loops
//! achieve the special crossing event of `N·Q_ext + (3Nj, 3Nk)`. The
//! vertical edge `{(j,k),(j,k+1)}` uses the quarter-turned rectangles
//! placed at `(3N(j+1), 3Nk)`, i.e. exterior `(3Nj, 3Nj+3N) × (3Nk, 3Nk+6N)`.
//! With this placement both edges at a block vertex cross the same
//! `N × N` square, which is what makes open paths carry loop clusters.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{cluster_loops, UnionFind};
use crate::crossing::{special_crossing_loops, BlockSpec, EventWitness};
use crate::error::{Error, Result};
use crate::kernel::{build_kernel, pointed_rates};
use crate::lattice::{rect_region, IntBox, Orientation, RealRect};
use crate::rng::stream_id;
use crate::sampler::{LoopSoup, SamplerConfig, SoupSampler};

/// Block vertices `(j, k)` with `0 ≤ j < width`, `1 ≤ k ≤ height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BlockGrid {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BlockEdge {
    pub j: u32,
    pub k: u32,
    pub orientation: Orientation,
}

impl BlockEdge {
    pub fn endpoints(&self) -> ((u32, u32), (u32, u32)) {
        match self.orientation {
            Orientation::Horizontal => ((self.j, self.k), (self.j + 1, self.k)),
            Orientation::Vertical => ((self.j, self.k), (self.j, self.k + 1)),
        }
    }

    pub fn spec(&self, scale: u32) -> BlockSpec {
        let n = scale as i64;
        let (j, k) = (self.j as i64, self.k as i64);
        match self.orientation {
            Orientation::Horizontal => BlockSpec::new(scale, false, (3 * n * j, 3 * n * k)),
            Orientation::Vertical => BlockSpec::new(scale, true, (3 * n * (j + 1), 3 * n * k)),
        }
    }
}

impl BlockGrid {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < 2 || height < 1 {
            return Err(Error::Precondition(format!(
                "block grid needs width >= 2 and height >= 1, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    /// Horizontal edges row by row, then vertical edges row by row.
    pub fn edges(&self) -> Vec<BlockEdge> {
        let mut out = Vec::new();
        for k in 1..=self.height {
            for j in 0..self.width - 1 {
                out.push(BlockEdge { j, k, orientation: Orientation::Horizontal });
            }
        }
        for k in 1..self.height {
            for j in 0..self.width {
                out.push(BlockEdge { j, k, orientation: Orientation::Vertical });
            }
        }
        out
    }

    pub fn vertex_index(&self, (j, k): (u32, u32)) -> usize {
        ((k - 1) * self.width + j) as usize
    }

    pub fn vertex_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    /// Smallest real rectangle containing every edge's exterior.
    pub fn hull(&self, scale: u32) -> RealRect {
        let mut it = self.edges().into_iter().map(|e| e.spec(scale).exterior());
        let first = it.next().expect("grid has edges");
        it.fold(first, |a, r| RealRect {
            x_min: a.x_min.min(r.x_min),
            x_max: a.x_max.max(r.x_max),
            y_min: a.y_min.min(r.y_min),
            y_max: a.y_max.max(r.y_max),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OmegaMode {
    Global,
    Independent,
}

impl OmegaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            OmegaMode::Global => "global",
            OmegaMode::Independent => "independent",
        }
    }
}

/// An edge configuration of the block lattice.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaField {
    pub grid: BlockGrid,
    pub edges: Vec<BlockEdge>,
    pub open: Vec<bool>,
    pub mode: OmegaMode,
    pub scale: u32,
    pub alpha: f64,
    pub seed: u64,
    /// Per-edge witnesses (global mode only), indices into the hull soup.
    #[serde(skip)]
    pub witnesses: Option<Vec<EventWitness>>,
}

impl OmegaField {
    /// A field with explicit edge values, for tests and tooling.
    pub fn from_values(grid: BlockGrid, open: Vec<bool>) -> Result<Self> {
        let edges = grid.edges();
        if edges.len() != open.len() {
            return Err(Error::Precondition(format!(
                "grid has {} edges, got {} values",
                edges.len(),
                open.len()
            )));
        }
        Ok(Self {
            grid,
            edges,
            open,
            mode: OmegaMode::Independent,
            scale: 0,
            alpha: 0.0,
            seed: 0,
            witnesses: None,
        })
    }

    pub fn value(&self, e: &BlockEdge) -> Option<bool> {
        self.edges.iter().position(|x| x == e).map(|i| self.open[i])
    }

    pub fn open_fraction(&self) -> f64 {
        if self.open.is_empty() {
            return 0.0;
        }
        self.open.iter().filter(|&&o| o).count() as f64 / self.open.len() as f64
    }

    /// Whether two open edges share an endpoint.
    pub fn has_open_adjacent_pair(&self) -> bool {
        let mut degree = vec![0u8; self.grid.vertex_count()];
        for (e, &o) in self.edges.iter().zip(&self.open) {
            if o {
                let (a, b) = e.endpoints();
                for v in [a, b] {
                    let d = &mut degree[self.grid.vertex_index(v)];
                    *d += 1;
                    if *d >= 2 {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Connected components of open edges, as lists of edge indices.
    pub fn open_components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.grid.vertex_count());
        for (e, &o) in self.edges.iter().zip(&self.open) {
            if o {
                let (a, b) = e.endpoints();
                uf.union(self.grid.vertex_index(a), self.grid.vertex_index(b));
            }
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, (e, &o)) in self.edges.iter().zip(&self.open).enumerate() {
            if o {
                let r = uf.find(self.grid.vertex_index(e.endpoints().0));
                by_root.entry(r).or_default().push(i);
            }
        }
        by_root.into_values().collect()
    }
}

fn check_hull(soup: &LoopSoup, scale: u32, grid: &BlockGrid) -> Result<()> {
    for e in grid.edges() {
        let Some(b) = e.spec(scale).exterior_box() else { continue };
        let covered = soup.region.bbox().is_some_and(|r| r.contains_box(&b))
            && (soup.region.is_box() || b.vertices().all(|v| soup.region.contains(v)));
        if !covered {
            return Err(Error::Precondition(format!(
                "soup region does not cover the exterior of block edge {e:?}"
            )));
        }
    }
    Ok(())
}

/// `ω^N` from one soup covering the whole grid (the faithful 1-dependent law).
pub fn build_omega_global(soup: &LoopSoup, scale: u32, grid: BlockGrid) -> Result<OmegaField> {
    if scale < 2 {
        return Err(Error::Precondition("block scale must be >= 2".into()));
    }
    check_hull(soup, scale, &grid)?;
    let edges = grid.edges();
    let witnesses: Vec<EventWitness> = edges
        .par_iter()
        .map(|e| special_crossing_loops(&soup.loops, &e.spec(scale), None))
        .collect();
    Ok(OmegaField {
        grid,
        open: witnesses.iter().map(|w| w.satisfied()).collect(),
        edges,
        mode: OmegaMode::Global,
        scale,
        alpha: soup.alpha,
        seed: soup.seed,
        witnesses: Some(witnesses),
    })
}

/// Region whose soups feed [`build_omega_global`].
pub fn hull_region(scale: u32, grid: &BlockGrid) -> crate::lattice::Region {
    rect_region(&grid.hull(scale), 1)
}

/// Sampler for the canonical block `N·Q_ext`, shared across edges.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    pub scale: u32,
    sampler: SoupSampler,
}

impl BlockSampler {
    pub fn new(scale: u32, config: SamplerConfig) -> Result<Self> {
        if scale < 2 {
            return Err(Error::Precondition("block scale must be >= 2".into()));
        }
        let region = rect_region(&BlockSpec::canonical(scale).exterior(), 1);
        let rates = Arc::new(pointed_rates(&build_kernel(region))?);
        Ok(Self { scale, sampler: SoupSampler::new(rates, config)? })
    }

    pub fn soup_sampler(&self) -> &SoupSampler {
        &self.sampler
    }

    pub fn spec(&self) -> BlockSpec {
        BlockSpec::canonical(self.scale)
    }

    /// i.i.d. surrogate: a fresh block soup per edge.
    pub fn omega_independent(&self, alpha: f64, grid: BlockGrid, seed: u64, replica: u64) -> Result<OmegaField> {
        let edges = grid.edges();
        let spec = self.spec();
        let open = edges
            .par_iter()
            .enumerate()
            .map(|(i, _)| {
                let soup = self.sampler.sample(alpha, seed, stream_id(i as u64 + 1, replica))?;
                Ok(special_crossing_loops(&soup.loops, &spec, None).satisfied())
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(OmegaField {
            grid,
            edges,
            open,
            mode: OmegaMode::Independent,
            scale: self.scale,
            alpha,
            seed,
            witnesses: None,
        })
    }
}

pub fn build_omega_independent(
    scale: u32,
    alpha: f64,
    grid: BlockGrid,
    seed: u64,
    config: SamplerConfig,
) -> Result<OmegaField> {
    BlockSampler::new(scale, config)?.omega_independent(alpha, grid, seed, 0)
}

/// Left-to-right open path of block vertices, shortest first.
pub fn spanning_open_path(omega: &OmegaField) -> Option<Vec<(u32, u32)>> {
    let g = omega.grid;
    let n = g.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for (e, &o) in omega.edges.iter().zip(&omega.open) {
        if o {
            let (a, b) = e.endpoints();
            adj[g.vertex_index(a)].push(b);
            adj[g.vertex_index(b)].push(a);
        }
    }
    let mut prev: Vec<Option<(u32, u32)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    for k in 1..=g.height {
        seen[g.vertex_index((0, k))] = true;
        queue.push_back((0u32, k));
    }
    while let Some(v) = queue.pop_front() {
        if v.0 == g.width - 1 {
            let mut path = vec![v];
            let mut cur = v;
            while let Some(p) = prev[g.vertex_index(cur)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &w in &adj[g.vertex_index(v)] {
            let wi = g.vertex_index(w);
            if !seen[wi] {
                seen[wi] = true;
                prev[wi] = Some(v);
                queue.push_back(w);
            }
        }
    }
    None
}

/// Outcome of checking that open ω-paths carry single loop clusters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub edges: usize,
    pub adjacent_pairs: usize,
    pub components: usize,
    pub failures: usize,
}

impl WitnessReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

fn single_cluster(soup: &LoopSoup, witnesses: &[EventWitness], edges: &[usize]) -> bool {
    let mut idx: Vec<usize> = edges.iter().flat_map(|&e| witnesses[e].loops()).collect();
    idx.sort_unstable();
    idx.dedup();
    let loops: Vec<_> = idx.iter().map(|&i| &soup.loops[i]).collect();
    cluster_loops(&loops).cluster_count() == 1
}

/// Witness loops of every open edge, of every pair of adjacent open edges
/// and of every open component must each form one cluster on their own.
/// Since consecutive edges of a path share witnesses' clusters, this covers
/// every open path.
pub fn witness_connectivity(omega: &OmegaField, soup: &LoopSoup) -> Result<WitnessReport> {
    let witnesses = omega
        .witnesses
        .as_ref()
        .ok_or_else(|| Error::Precondition("witness check needs a global-mode field".into()))?;
    let mut report = WitnessReport::default();
    let open: Vec<usize> = (0..omega.edges.len()).filter(|&i| omega.open[i]).collect();
    for (n, &a) in open.iter().enumerate() {
        report.edges += 1;
        report.failures += !single_cluster(soup, witnesses, &[a]) as usize;
        let (a0, a1) = omega.edges[a].endpoints();
        for &b in &open[n + 1..] {
            let (b0, b1) = omega.edges[b].endpoints();
            if a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1 {
                report.adjacent_pairs += 1;
                report.failures += !single_cluster(soup, witnesses, &[a, b]) as usize;
            }
        }
    }
    for comp in omega.open_components() {
        report.components += 1;
        report.failures += !single_cluster(soup, witnesses, &comp) as usize;
    }
    Ok(report)
}

pub fn witness_connectivity_check(omega: &OmegaField, soup: &LoopSoup) -> Result<bool> {
    Ok(witness_connectivity(omega, soup)?.ok())
}

/// Lattice boxes of two edges' exteriors are disjoint.
pub fn exteriors_disjoint(a: &BlockEdge, b: &BlockEdge, scale: u32) -> bool {
    let boxes: Vec<Option<IntBox>> = [a, b].iter().map(|e| e.spec(scale).exterior_box()).collect();
    match (boxes[0], boxes[1]) {
        (Some(x), Some(y)) => !x.intersects(&y),
        _ => true,
    }
}

/// Schemes for the i.i.d. density dominated by a 1-dependent field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DominationScheme {
    /// Degree bound for a dependency graph of maximum degree `degree`.
    /// Heuristic: the constant is recalled, not derived here.
    LssDegree { degree: u32 },
}

/// Edges within edge-distance two of a given edge of ℤ².
pub const EDGE_DEPENDENCY_DEGREE: u32 = 22;

impl DominationScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "lss" => Ok(Self::LssDegree { degree: EDGE_DEPENDENCY_DEGREE }),
            Some(("lss", d)) => {
                let degree: u32 = d.parse().map_err(|_| Error::Usage(format!("bad degree in scheme {s:?}")))?;
                if degree < 2 {
                    return Err(Error::Usage(format!("scheme {s:?} needs degree >= 2")));
                }
                Ok(Self::LssDegree { degree })
            }
            _ => Err(Error::Usage(format!("unknown domination scheme {s:?}"))),
        }
    }
}

/// Lower bound `p̃(p)` for the dominated Bernoulli density.
pub fn lss_dominated_p(p: f64, scheme: &str) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!("p = {p} is not a probability")));
    }
    match DominationScheme::parse(scheme)? {
        DominationScheme::LssDegree { degree } => {
            let d = degree as f64;
            let q = 1.0 - p;
            let threshold = (d - 1.0).powf(d - 1.0) / d.powf(d);
            if q > threshold {
                return Ok(0.0);
            }
            let a = 1.0 - q.powf(1.0 / d) / (d - 1.0).powf((d - 1.0) / d);
            let b = 1.0 - (q * (d - 1.0)).powf(1.0 / d);
            Ok((a * b).clamp(0.0, 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{DiscreteLoop, Region, Vertex};

    #[test]
    fn edge_geometry() {
        let h = BlockEdge { j: 0, k: 1, orientation: Orientation::Horizontal };
        let e = h.spec(2).exterior();
        assert_eq!((e.x_min, e.x_max, e.y_min, e.y_max), (0.0, 12.0, 6.0, 12.0));
        let v = BlockEdge { j: 0, k: 1, orientation: Orientation::Vertical };
        let e = v.spec(2).exterior();
        assert_eq!((e.x_min, e.x_max, e.y_min, e.y_max), (0.0, 6.0, 6.0, 18.0));
        // the vertical edge's lower square is the horizontal edge's left square
        let hc = h.spec(2).conditions();
        let vc = v.spec(2).conditions();
        assert_eq!(hc[1].cluster_rect, vc[1].cluster_rect);
    }

    #[test]
    fn grid_edges_and_hull() {
        let g = BlockGrid::new(3, 2).unwrap();
        assert_eq!(g.edges().len(), 2 * 2 + 3);
        let hull = g.hull(4);
        assert_eq!((hull.x_min, hull.x_max, hull.y_min, hull.y_max), (0.0, 36.0, 12.0, 36.0));
        assert!(BlockGrid::new(1, 3).is_err());
    }

    #[test]
    fn spanning_paths() {
        let g = BlockGrid::new(3, 2).unwrap();
        let n = g.edges().len();
        let all = OmegaField::from_values(g, vec![true; n]).unwrap();
        assert!(spanning_open_path(&all).is_some());
        let none = OmegaField::from_values(g, vec![false; n]).unwrap();
        assert!(spanning_open_path(&none).is_none());
        // path (0,1) -> (0,2) -> (1,2) -> (2,2)
        let edges = g.edges();
        let want = [
            BlockEdge { j: 0, k: 1, orientation: Orientation::Vertical },
            BlockEdge { j: 0, k: 2, orientation: Orientation::Horizontal },
            BlockEdge { j: 1, k: 2, orientation: Orientation::Horizontal },
        ];
        let open = edges.iter().map(|e| want.contains(e)).collect();
        let f = OmegaField::from_values(g, open).unwrap();
        assert_eq!(spanning_open_path(&f).unwrap(), vec![(0, 2), (1, 2), (2, 2)]);
    }

    #[test]
    fn open_pairs_and_components() {
        let g = BlockGrid::new(3, 1).unwrap();
        let f = OmegaField::from_values(g, vec![true, false]).unwrap();
        assert!(!f.has_open_adjacent_pair());
        assert_eq!(f.open_components(), vec![vec![0]]);
        let f = OmegaField::from_values(g, vec![true, true]).unwrap();
        assert!(f.has_open_adjacent_pair());
        assert_eq!(f.open_components(), vec![vec![0, 1]]);
    }

    #[test]
    fn empty_soup_closes_everything() {
        let g = BlockGrid::new(2, 2).unwrap();
        let region = Arc::new(hull_region(2, &g));
        let soup = LoopSoup::empty(region, 0.0, 0, 0);
        let f = build_omega_global(&soup, 2, g).unwrap();
        assert!(f.open.iter().all(|o| !o));
        assert!(witness_connectivity_check(&f, &soup).unwrap());
    }

    #[test]
    fn hull_must_cover_grid() {
        let g = BlockGrid::new(3, 2).unwrap();
        let small = Region::from_box(IntBox { x0: 1, x1: 10, y0: 1, y1: 10 });
        let soup = LoopSoup::empty(Arc::new(small), 1.0, 0, 0);
        assert!(build_omega_global(&soup, 2, g).is_err());
    }

    fn retrace(pts: &[(i32, i32)]) -> DiscreteLoop {
        let mut all: Vec<(i32, i32)> = pts.to_vec();
        all.extend(pts[1..pts.len() - 1].iter().rev());
        DiscreteLoop::new(all.iter().map(|&(x, y)| Vertex::new(x, y)).collect()).unwrap()
    }

    /// A straight witness for a horizontal edge at scale 2: row crossing plus
    /// two column crossings, all as thin out-and-back loops.
    fn horizontal_witness(e: &BlockEdge, n: i32) -> Vec<DiscreteLoop> {
        let (ox, oy) = (3 * n * e.j as i32, 3 * n * e.k as i32);
        let row = oy + n + n / 2;
        let mut out = vec![
            retrace(&(ox + n + 1..=ox + 5 * n - 1).map(|x| (x, row)).collect::<Vec<_>>()),
            retrace(&(ox + n - 1..=ox + n + 1).map(|x| (x, row)).collect::<Vec<_>>()),
            retrace(&(ox + 5 * n - 1..=ox + 5 * n + 1).map(|x| (x, row)).collect::<Vec<_>>()),
        ];
        for col in [ox + n + n / 2, ox + 4 * n + n / 2] {
            out.push(retrace(&(oy + n + 1..=oy + 2 * n - 1).map(|y| (col, y)).collect::<Vec<_>>()));
            out.push(retrace(&(oy + n - 1..=oy + n + 1).map(|y| (col, y)).collect::<Vec<_>>()));
            out.push(retrace(&(oy + 2 * n - 1..=oy + 2 * n + 1).map(|y| (col, y)).collect::<Vec<_>>()));
        }
        out
    }

    #[test]
    fn handcrafted_adjacent_edges_open() {
        let n = 4;
        let g = BlockGrid::new(3, 1).unwrap();
        let region = Arc::new(hull_region(n as u32, &g));
        let mut loops = Vec::new();
        for e in g.edges() {
            loops.extend(horizontal_witness(&e, n));
        }
        let soup = LoopSoup::handcrafted(region, loops).unwrap();
        let f = build_omega_global(&soup, n as u32, g).unwrap();
        assert_eq!(f.open, vec![true, true]);
        assert!(witness_connectivity_check(&f, &soup).unwrap());
    }

    #[test]
    fn locality_of_a_single_edge() {
        let n = 4;
        let g = BlockGrid::new(3, 1).unwrap();
        let region = Arc::new(hull_region(n as u32, &g));
        let edges = g.edges();
        let mut loops = horizontal_witness(&edges[0], n);
        let own = loops.len();
        loops.extend(horizontal_witness(&edges[1], n));
        let soup = LoopSoup::handcrafted(region.clone(), loops.clone()).unwrap();
        let full = build_omega_global(&soup, n as u32, g).unwrap();
        let ext = edges[0].spec(n as u32).exterior_box().unwrap();
        let local: Vec<DiscreteLoop> = loops.into_iter().filter(|l| ext.contains_box(&l.bbox())).collect();
        assert!(local.len() >= own);
        let soup2 = LoopSoup::handcrafted(region, local).unwrap();
        let part = build_omega_global(&soup2, n as u32, g).unwrap();
        assert_eq!(full.open[0], part.open[0]);
    }

    #[test]
    fn disjoint_exteriors() {
        let a = BlockEdge { j: 0, k: 1, orientation: Orientation::Horizontal };
        let b = BlockEdge { j: 2, k: 1, orientation: Orientation::Horizontal };
        let c = BlockEdge { j: 1, k: 1, orientation: Orientation::Horizontal };
        assert!(exteriors_disjoint(&a, &b, 3));
        assert!(!exteriors_disjoint(&a, &c, 3));
    }

    #[test]
    fn lss_contract() {
        assert_eq!(lss_dominated_p(1.0, "lss").unwrap(), 1.0);
        assert_eq!(lss_dominated_p(0.0, "lss").unwrap(), 0.0);
        assert!(lss_dominated_p(0.99, "lss").unwrap() >= lss_dominated_p(0.9, "lss").unwrap());
        let mut prev = 0.0;
        for i in 0..=1000 {
            let p = lss_dominated_p(i as f64 / 1000.0, "lss:6").unwrap();
            assert!(p >= prev && p <= 1.0);
            prev = p;
        }
        assert!(lss_dominated_p(0.5, "nonsense").is_err());
        assert!(lss_dominated_p(1.5, "lss").is_err());
    }
}
