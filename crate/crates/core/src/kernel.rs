//! Exact linear algebra for the random walk loop measure on a finite region.
//!
//! `P` is the transition matrix of simple random walk on ℤ² killed outside
//! the region, so `P[u][w] = 1/4` for neighbouring `u, w` and `0` otherwise.
//! The total mass of rooted loops is `Σ_m tr(P^m)/m = −log det(I − P)`, and
//! eliminating vertices one at a time splits it into per-vertex rates
//! `λ_i = log(1/(1 − r_i))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, Vertex};

/// Vertex cap for the dense Green-function path.
pub const DENSE_LIMIT: usize = 8_000;

/// Sub-stochastic kernel of a region together with an elimination order.
#[derive(Debug, Clone)]
pub struct ExactKernel {
    region: Arc<Region>,
    ordering: Vec<usize>,
    position: Vec<usize>,
}

pub fn build_kernel(region: Region) -> ExactKernel {
    ExactKernel::new(Arc::new(region))
}

impl ExactKernel {
    /// Lexicographic (`y` then `x`) ordering.
    pub fn new(region: Arc<Region>) -> Self {
        let n = region.len();
        Self { region, ordering: (0..n).collect(), position: (0..n).collect() }
    }

    pub fn with_ordering(region: Arc<Region>, ordering: &[Vertex]) -> Result<Self> {
        let n = region.len();
        if ordering.len() != n {
            return Err(Error::Precondition(format!(
                "ordering has {} vertices, region has {n}",
                ordering.len()
            )));
        }
        let mut position = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        for (p, v) in ordering.iter().enumerate() {
            let i = region
                .index_of(*v)
                .ok_or_else(|| Error::Precondition(format!("ordering vertex {v} not in region")))?;
            if position[i] != usize::MAX {
                return Err(Error::Precondition(format!("ordering repeats {v}")));
            }
            position[i] = p;
            order.push(i);
        }
        Ok(Self { region, ordering: order, position })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn region_arc(&self) -> Arc<Region> {
        Arc::clone(&self.region)
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// The vertex sequence `v_1, …, v_n`.
    pub fn ordering(&self) -> Vec<Vertex> {
        self.ordering.iter().map(|&i| self.region.vertices()[i]).collect()
    }

    /// `P[a][b]` in ordering coordinates.
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        let vs = self.region.vertices();
        if vs[self.ordering[a]].is_neighbour(&vs[self.ordering[b]]) {
            0.25
        } else {
            0.0
        }
    }

    /// Dense row-major `P` in ordering coordinates.
    pub fn dense_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut p = vec![0.0; n * n];
        for (u, w) in self.region.edges() {
            let (a, b) = (self.position[u], self.position[w]);
            p[a * n + b] = 0.25;
            p[b * n + a] = 0.25;
        }
        p
    }

    /// Neighbour lists in ordering coordinates.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::with_capacity(4); self.len()];
        for (u, w) in self.region.edges() {
            let (a, b) = (self.position[u], self.position[w]);
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Content hash of `(region, ordering)`.
    pub fn cache_key(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.region.content_hash().as_bytes());
        for v in self.ordering() {
            h.update(v.x.to_le_bytes());
            h.update(v.y.to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }
}

/// LDLᵀ pivots of `I − P` in the given order (band storage).
///
/// Pivot `k` is the Schur complement of the `k`-th vertex once the earlier
/// ones are eliminated.
fn ldl_pivots(adj: &[Vec<usize>], order: &[usize]) -> Result<Vec<f64>> {
    let n = order.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    // pos: original coordinate -> elimination position
    let mut pos = vec![0usize; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let mut w = 0usize;
    for (i, nb) in adj.iter().enumerate() {
        for &j in nb {
            w = w.max(pos[i].abs_diff(pos[j]));
        }
    }
    let stride = w + 1;
    // row p holds columns p-w ..= p at offsets 0 ..= w
    let mut band = vec![0.0f64; n * stride];
    for (p, &i) in order.iter().enumerate() {
        band[p * stride + w] = 1.0;
        for &j in &adj[i] {
            let q = pos[j];
            if q < p {
                band[p * stride + (q + w - p)] = -0.25;
            }
        }
    }
    let mut d = vec![0.0f64; n];
    let mut scratch = vec![0.0f64; stride];
    for p in 0..n {
        let lo = p.saturating_sub(w);
        // row p below: L[p][q] * d[q] stored in scratch for reuse
        for q in lo..p {
            let mut s = band[p * stride + (q + w - p)];
            let klo = lo.max(q.saturating_sub(w));
            for k in klo..q {
                s -= scratch[k - lo] * band[q * stride + (k + w - q)];
            }
            scratch[q - lo] = s; // = L[p][q] * d[q]
            band[p * stride + (q + w - p)] = s / d[q];
        }
        let mut diag = band[p * stride + w];
        for q in lo..p {
            diag -= scratch[q - lo] * band[p * stride + (q + w - p)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Numerical(format!("non-positive pivot {diag} at position {p}")));
        }
        d[p] = diag;
    }
    Ok(d)
}

/// `m(A) = −log det(I − P)`.
pub fn total_loop_mass(kernel: &ExactKernel) -> Result<f64> {
    let adj = kernel.adjacency();
    let order: Vec<usize> = (0..kernel.len()).collect();
    Ok(ldl_pivots(&adj, &order)?.iter().map(|d| -d.ln()).sum())
}

/// Return probabilities under sequential vertex removal.
#[derive(Debug, Clone)]
pub struct PointedRates {
    region: Arc<Region>,
    ordering: Vec<Vertex>,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl PointedRates {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn region_arc(&self) -> Arc<Region> {
        Arc::clone(&self.region)
    }

    pub fn ordering(&self) -> &[Vertex] {
        &self.ordering
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `Σ λ_i`, which equals the total loop mass of the region.
    pub fn total(&self) -> f64 {
        self.lambda.iter().sum()
    }

    fn from_r(kernel: &ExactKernel, r: Vec<f64>) -> Self {
        let lambda = r.iter().map(|&ri| -(1.0 - ri).ln()).collect();
        Self { region: kernel.region_arc(), ordering: kernel.ordering(), r, lambda }
    }

    pub fn to_cache(&self, kernel: &ExactKernel) -> Result<RatesCache> {
        Ok(RatesCache {
            key: kernel.cache_key(),
            region_hash: self.region.content_hash(),
            ordering: self.ordering.iter().map(|v| [v.x, v.y]).collect(),
            r: self.r.clone(),
            lambda: self.lambda.clone(),
            mass: total_loop_mass(kernel)?,
        })
    }
}

/// `r_i` from the pivots of `I − P` eliminated in reverse order.
///
/// With `v_{i+1}, …, v_n` eliminated first, the pivot at `v_i` is
/// `1 / G_i(v_i, v_i)` where `G_i` is the Green function of
/// `{v_i, …, v_n}`, so `r_i = 1 − pivot`. Cost is `O(n w²)` for an
/// ordering of bandwidth `w`.
pub fn pointed_rates(kernel: &ExactKernel) -> Result<PointedRates> {
    let n = kernel.len();
    let adj = kernel.adjacency();
    let rev: Vec<usize> = (0..n).rev().collect();
    let piv = ldl_pivots(&adj, &rev)?;
    let r = (0..n).map(|i| (1.0 - piv[n - 1 - i]).max(0.0)).collect();
    Ok(PointedRates::from_r(kernel, r))
}

/// Reference path: dense Green function with rank-one removal updates.
///
/// Keeps `G = (I − P)^{-1}` on the surviving set, reads
/// `r_i = 1 − 1/G(v_i, v_i)` and then removes `v_i` via
/// `G'(x, y) = G(x, y) − G(x, v_i) G(v_i, y) / G(v_i, v_i)`.
pub fn pointed_rates_dense(kernel: &ExactKernel) -> Result<PointedRates> {
    let n = kernel.len();
    if n > DENSE_LIMIT {
        return Err(Error::Precondition(format!(
            "dense elimination capped at {DENSE_LIMIT} vertices, got {n}"
        )));
    }
    let mut m = kernel.dense_matrix();
    for x in m.iter_mut() {
        *x = -*x;
    }
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    let mut g = invert_spd(m, n)?;
    let mut r = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    for i in 0..n {
        let gii = g[i * n + i];
        r.push((1.0 - 1.0 / gii).max(0.0));
        for x in i + 1..n {
            col[x] = g[x * n + i];
        }
        for x in i + 1..n {
            let f = col[x] / gii;
            if f == 0.0 {
                continue;
            }
            let row = &mut g[x * n..(x + 1) * n];
            for y in i + 1..n {
                row[y] -= f * col[y];
            }
        }
    }
    Ok(PointedRates::from_r(kernel, r))
}

/// Gauss–Jordan inverse of a symmetric positive definite matrix.
fn invert_spd(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let p = a[c * n + c];
        if !(p > 0.0) {
            return Err(Error::Numerical(format!("singular pivot at column {c}")));
        }
        let ip = 1.0 / p;
        for k in 0..n {
            a[c * n + k] *= ip;
            inv[c * n + k] *= ip;
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = a[r * n + c];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a[r * n + k] -= f * a[c * n + k];
                inv[r * n + k] -= f * inv[c * n + k];
            }
        }
    }
    Ok(inv)
}

/// Mass of the loops in the region that visit `v`: `m(A) − m(A∖{v})`.
pub fn vertex_hit_mass(kernel: &ExactKernel, v: Vertex) -> Result<f64> {
    if !kernel.region().contains(v) {
        return Err(Error::Precondition(format!("{v} is not in the kernel's region")));
    }
    let without = build_kernel(kernel.region().without(v));
    Ok((total_loop_mass(kernel)? - total_loop_mass(&without)?).max(0.0))
}

/// Mass of the loops whose range is one fixed edge: `Σ_k 16^{-k}/k = log(16/15)`.
pub fn edge_backforth_mass() -> f64 {
    (16.0f64 / 15.0).ln()
}

/// JSON cache document for precomputed rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesCache {
    pub key: String,
    pub region_hash: String,
    pub ordering: Vec<[i32; 2]>,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mass: f64,
}

impl RatesCache {
    /// Rebuilds rates if the cache matches the kernel.
    pub fn restore(&self, kernel: &ExactKernel) -> Option<PointedRates> {
        (self.key == kernel.cache_key()).then(|| PointedRates::from_r(kernel, self.r.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{IntBox, Region};

    fn v(x: i32, y: i32) -> Vertex {
        Vertex::new(x, y)
    }

    fn region(vs: &[(i32, i32)]) -> Region {
        Region::from_vertices(vs.iter().map(|&(x, y)| v(x, y))).unwrap()
    }

    #[test]
    fn kernel_matrices() {
        let k = build_kernel(region(&[(0, 1), (1, 1)]));
        assert_eq!(k.dense_matrix(), vec![0.0, 0.25, 0.25, 0.0]);
        assert_eq!(build_kernel(region(&[(0, 1)])).dense_matrix(), vec![0.0]);
        assert_eq!(build_kernel(region(&[(0, 1), (2, 1)])).dense_matrix(), vec![0.0; 4]);
    }

    #[test]
    fn two_vertex_mass() {
        let k = build_kernel(region(&[(0, 1), (1, 1)]));
        let m = total_loop_mass(&k).unwrap();
        assert!((m - (16.0f64 / 15.0).ln()).abs() < 1e-12);
        assert!((m - 0.0645385211375712).abs() < 1e-12);
    }

    #[test]
    fn degenerate_masses() {
        assert_eq!(total_loop_mass(&build_kernel(region(&[(0, 1)]))).unwrap(), 0.0);
        assert_eq!(total_loop_mass(&build_kernel(Region::empty())).unwrap(), 0.0);
        let r = pointed_rates(&build_kernel(region(&[(0, 1)]))).unwrap();
        assert_eq!(r.r, vec![0.0]);
    }

    #[test]
    fn two_vertex_rates() {
        let k = build_kernel(region(&[(0, 1), (1, 1)]));
        for rates in [pointed_rates(&k).unwrap(), pointed_rates_dense(&k).unwrap()] {
            assert!((rates.r[0] - 1.0 / 16.0).abs() < 1e-15);
            assert!(rates.r[1].abs() < 1e-15);
        }
    }

    #[test]
    fn strip_middle_first_rate() {
        // brute force: sum over return paths of 4^{-len} inside the strip, len <= 40
        let reg = region(&[(0, 1), (1, 1), (2, 1)]);
        let vs = reg.vertices().to_vec();
        let mut oracle = 0.0;
        // dp over walks from the middle that have not yet returned
        let mut alive: Vec<f64> = vec![0.0, 1.0, 0.0];
        for step in 1..=40 {
            let mut next = vec![0.0; 3];
            for (i, &w) in alive.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for j in 0..3 {
                    if vs[i].is_neighbour(&vs[j]) {
                        next[j] += w * 0.25;
                    }
                }
            }
            oracle += next[1];
            next[1] = 0.0;
            alive = next;
            if step == 40 {
                assert!(alive.iter().sum::<f64>() < 1e-10);
            }
        }
        assert!((oracle - 0.125).abs() < 1e-12);
        let order = [v(1, 1), v(0, 1), v(2, 1)];
        let k = ExactKernel::with_ordering(Arc::new(reg), &order).unwrap();
        let rates = pointed_rates(&k).unwrap();
        assert!((rates.r[0] - oracle).abs() < 1e-10);
        let dense = pointed_rates_dense(&k).unwrap();
        assert!((dense.r[0] - oracle).abs() < 1e-10);
    }

    #[test]
    fn banded_and_dense_rates_agree() {
        let reg = Arc::new(Region::from_box(IntBox { x0: 0, x1: 6, y0: 1, y1: 4 }));
        let k = ExactKernel::new(reg.clone());
        let a = pointed_rates(&k).unwrap();
        let b = pointed_rates_dense(&k).unwrap();
        for (x, y) in a.r.iter().zip(&b.r) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut order = k.ordering();
        order.reverse();
        order.swap(3, 17);
        let k2 = ExactKernel::with_ordering(reg, &order).unwrap();
        let c = pointed_rates(&k2).unwrap();
        let d = pointed_rates_dense(&k2).unwrap();
        for (x, y) in c.r.iter().zip(&d.r) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((c.total() - a.total()).abs() < 1e-10);
    }

    #[test]
    fn hit_mass() {
        let k = build_kernel(region(&[(0, 1), (1, 1)]));
        let l = (16.0f64 / 15.0).ln();
        assert!((vertex_hit_mass(&k, v(0, 1)).unwrap() - l).abs() < 1e-12);
        assert!((vertex_hit_mass(&k, v(1, 1)).unwrap() - l).abs() < 1e-12);
        let k = build_kernel(region(&[(0, 1), (1, 1), (5, 1)]));
        assert!(vertex_hit_mass(&k, v(5, 1)).unwrap().abs() < 1e-14);
        assert!(vertex_hit_mass(&k, v(9, 1)).is_err());
    }

    #[test]
    fn backforth_mass_series() {
        let series: f64 = (1..60).map(|k| 16f64.powi(-k) / k as f64).sum();
        assert!((edge_backforth_mass() - series).abs() < 1e-15);
    }

    #[test]
    fn ordering_validation() {
        let reg = Arc::new(region(&[(0, 1), (1, 1)]));
        assert!(ExactKernel::with_ordering(reg.clone(), &[v(0, 1)]).is_err());
        assert!(ExactKernel::with_ordering(reg.clone(), &[v(0, 1), v(0, 1)]).is_err());
        assert!(ExactKernel::with_ordering(reg, &[v(0, 1), v(3, 1)]).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let k = build_kernel(Region::from_box(IntBox { x0: 0, x1: 3, y0: 1, y1: 2 }));
        let rates = pointed_rates(&k).unwrap();
        let doc = serde_json::to_string(&rates.to_cache(&k).unwrap()).unwrap();
        let back: RatesCache = serde_json::from_str(&doc).unwrap();
        let restored = back.restore(&k).unwrap();
        assert_eq!(restored.r, rates.r);
        let other = build_kernel(Region::from_box(IntBox { x0: 0, x1: 3, y0: 1, y1: 3 }));
        assert!(back.restore(&other).is_none());
    }
}
