//! Monte Carlo campaigns: crossing sweeps, critical intensity, truncation,
//! the Bernoulli minorant and the `Φ_N` export.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::BlockSampler;
use crate::cluster::{build_clusters, cluster_crosses_rect, crossing_flags, largest_cluster_stats, IncrementalClusters, UnionFind};
use crate::crossing::special_crossing_loops;
use crate::error::{Error, Result};
use crate::kernel::{build_kernel, edge_backforth_mass, pointed_rates};
use crate::lattice::{DiscreteLoop, IntBox, Orientation, RealRect, Region};
use crate::rng::{stream_id, substream};
use crate::sampler::{check_ascending, filter_by_diameter, SamplerConfig, SoupSampler};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval at 95%.
pub fn wilson(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub n: u32,
    pub samples: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl SweepRow {
    fn new(alpha: f64, n: u32, successes: usize, samples: usize, seed: u64) -> Self {
        let (ci_low, ci_high) = wilson(successes, samples);
        let p_hat = if samples == 0 { 0.0 } else { successes as f64 / samples as f64 };
        Self { alpha, n, samples, successes, p_hat, ci_low, ci_high, seed }
    }

    pub fn sigma(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.samples.max(1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub confidence: f64,
    /// Replicas lost to sampling failures, per scale.
    pub failures: Vec<(u32, usize)>,
    /// Per scale, per replica: event outcome at each alpha.
    #[serde(skip)]
    pub outcomes: Vec<Vec<Vec<bool>>>,
}

impl SweepResult {
    pub fn row(&self, alpha: f64, n: u32) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.alpha == alpha && r.n == n)
    }

    /// Replicas whose outcome decreases somewhere along the alpha grid.
    pub fn monotonicity_violations(&self) -> usize {
        self.outcomes
            .iter()
            .flatten()
            .filter(|o| o.windows(2).any(|w| w[0] && !w[1]))
            .count()
    }
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed * 1000 > total {
        return Err(Error::SamplingFailure(format!(
            "{failed} of {total} replicas failed to sample (limit 0.1%)"
        )));
    }
    Ok(())
}

/// Special-crossing frequency on the single-block exterior, coupled in alpha.
pub fn sweep_crossing_probability(
    alphas: &[f64],
    ns: &[u32],
    samples: usize,
    seed: u64,
    config: SamplerConfig,
) -> Result<SweepResult> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    if let Some(n) = ns.iter().find(|&&n| n < 2) {
        return Err(Error::Precondition(format!("block scale N = {n} must be >= 2")));
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    check_ascending(&sorted)?;
    let top = *sorted.last().ok_or_else(|| Error::Precondition("no intensities given".into()))?;

    let mut result = SweepResult { rows: Vec::new(), confidence: 0.95, failures: Vec::new(), outcomes: Vec::new() };
    for &n in ns {
        let block = BlockSampler::new(n, config)?;
        let spec = block.spec();
        let per_replica: Vec<Option<Vec<bool>>> = (0..samples)
            .into_par_iter()
            .map(|r| {
                let marked = block.soup_sampler().sample_marked(top, seed, stream_id(n as u64, r as u64)).ok()?;
                Some(sorted.iter().map(|&a| special_crossing_loops(&marked.at(a).loops, &spec, None).satisfied()).collect())
            })
            .collect();
        let failed = per_replica.iter().filter(|o| o.is_none()).count();
        check_failures(failed, samples)?;
        let ok: Vec<Vec<bool>> = per_replica.into_iter().flatten().collect();
        for &alpha in alphas {
            let i = sorted.iter().position(|&a| a == alpha).expect("alpha in grid");
            let hits = ok.iter().filter(|o| o[i]).count();
            result.rows.push(SweepRow::new(alpha, n, hits, ok.len(), seed));
        }
        result.failures.push((n, failed));
        result.outcomes.push(ok);
    }
    Ok(result)
}

/// Cross-N table of `p_N` at one intensity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Difference to the previous row, `None` for the first.
    pub diff: Option<f64>,
}

pub fn convergence_diagnostic(
    ns: &[u32],
    alpha: f64,
    samples: usize,
    seed: u64,
    config: SamplerConfig,
) -> Result<Vec<ConvergenceRow>> {
    if ns.len() < 2 {
        return Err(Error::Precondition("convergence diagnostic needs at least two scales".into()));
    }
    let sweep = sweep_crossing_probability(&[alpha], ns, samples, seed, config)?;
    let mut prev: Option<f64> = None;
    Ok(sweep
        .rows
        .iter()
        .map(|r| {
            let row = ConvergenceRow {
                n: r.n,
                p_hat: r.p_hat,
                ci_low: r.ci_low,
                ci_high: r.ci_high,
                diff: prev.map(|p| r.p_hat - p),
            };
            prev = Some(r.p_hat);
            row
        })
        .collect())
}

/// Region `(0, 2M) × (0, M+1)` and its central square `(M/2, 3M/2) × (0, M+1)`.
pub fn crossing_box(m: u32) -> Result<(Region, RealRect)> {
    if m < 2 {
        return Err(Error::Precondition(format!("box size M = {m} must be >= 2")));
    }
    let m = m as f64;
    let outer = RealRect::new(0.0, 2.0 * m, 0.0, m + 1.0)?;
    let square = RealRect::new(m / 2.0, 1.5 * m, 0.0, m + 1.0)?;
    Ok((crate::lattice::rect_region(&outer, 1), square))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingCurve {
    pub m: u32,
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub p_hat: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Interpolated level-1/2 intensity; `None` when the curve stays on one side.
    pub alpha_hat: Option<f64>,
    pub failures: usize,
    #[serde(skip)]
    pub outcomes: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaCEstimate {
    pub curves: Vec<CrossingCurve>,
    pub target: f64,
    pub seed: u64,
}

impl AlphaCEstimate {
    pub fn alpha_hats(&self) -> Vec<Option<f64>> {
        self.curves.iter().map(|c| c.alpha_hat).collect()
    }
}

/// Linear interpolation of an increasing curve at `level`.
pub fn interpolate_level(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    let i = ys.iter().position(|&y| y >= level)?;
    if i == 0 {
        return (ys[0] == level).then_some(xs[0]);
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    Some(x0 + (level - y0) * (x1 - x0) / (y1 - y0))
}

/// Left-right crossing of the central square, per replica and alpha.
fn crossing_outcomes(
    sampler: &SoupSampler,
    square: &IntBox,
    bbox: IntBox,
    alphas: &[f64],
    seed: u64,
    stream: u64,
) -> Result<Vec<bool>> {
    let top = *alphas.last().expect("non-empty grid");
    let marked = sampler.sample_marked(top, seed, stream)?;
    let mut clusters = IncrementalClusters::new(bbox, 3);
    let order = marked.arrival_order();
    let mut next = 0;
    let mut out = Vec::with_capacity(alphas.len());
    for &a in alphas {
        while next < order.len() && marked.marks[order[next]] < a {
            let l = &marked.soup.loops[order[next]];
            clusters.insert(l, crossing_flags(l, square, Orientation::Horizontal));
            next += 1;
        }
        out.push(clusters.has_full_cluster());
    }
    Ok(out)
}

pub fn estimate_alpha_c(
    box_sizes: &[u32],
    alpha_grid: &[f64],
    samples: usize,
    seed: u64,
    config: SamplerConfig,
) -> Result<AlphaCEstimate> {
    check_ascending(alpha_grid)?;
    if alpha_grid.is_empty() || samples == 0 {
        return Err(Error::Precondition("need a non-empty alpha grid and samples >= 1".into()));
    }
    if box_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("box sizes must be ascending".into()));
    }
    let mut curves = Vec::new();
    for &m in box_sizes {
        let (region, square) = crossing_box(m)?;
        let bbox = region.bbox().expect("non-empty box");
        let square = square.lattice_box(1).expect("non-empty square");
        let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), config)?;
        let per: Vec<Option<Vec<bool>>> = (0..samples)
            .into_par_iter()
            .map(|r| crossing_outcomes(&sampler, &square, bbox, alpha_grid, seed, stream_id(m as u64, r as u64)).ok())
            .collect();
        let failures = per.iter().filter(|o| o.is_none()).count();
        check_failures(failures, samples)?;
        let ok: Vec<Vec<bool>> = per.into_iter().flatten().collect();
        let mut curve = CrossingCurve {
            m,
            alphas: alpha_grid.to_vec(),
            samples: ok.len(),
            p_hat: Vec::new(),
            ci_low: Vec::new(),
            ci_high: Vec::new(),
            alpha_hat: None,
            failures,
            outcomes: Vec::new(),
        };
        for i in 0..alpha_grid.len() {
            let hits = ok.iter().filter(|o| o[i]).count();
            let (lo, hi) = wilson(hits, ok.len());
            curve.p_hat.push(hits as f64 / ok.len() as f64);
            curve.ci_low.push(lo);
            curve.ci_high.push(hi);
        }
        curve.alpha_hat = interpolate_level(alpha_grid, &curve.p_hat, 0.5);
        curve.outcomes = ok;
        curves.push(curve);
    }
    Ok(AlphaCEstimate { curves, target: 0.5, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationRow {
    /// `None` is the unfiltered soup.
    pub cutoff: Option<u32>,
    pub samples: usize,
    pub crossing_freq: f64,
    pub mean_largest_vertices: f64,
    pub mean_largest_diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationTable {
    pub alpha: f64,
    pub m: u32,
    pub seed: u64,
    pub rows: Vec<TruncationRow>,
    /// Per replica, per row: (crosses, largest vertex count).
    #[serde(skip)]
    pub per_replica: Vec<Vec<(bool, usize)>>,
}

/// Crossing and largest-cluster statistics of diameter-truncated soups.
pub fn truncation_experiment(
    alpha: f64,
    cutoffs: &[u32],
    box_size: u32,
    samples: usize,
    seed: u64,
    config: SamplerConfig,
) -> Result<TruncationTable> {
    if !(alpha > 0.5) || !alpha.is_finite() {
        return Err(Error::Precondition(format!("truncation needs alpha > 1/2, got {alpha}")));
    }
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("cutoffs must be ascending".into()));
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let (region, square) = crossing_box(box_size)?;
    let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), config)?;
    let levels: Vec<Option<u32>> = cutoffs.iter().map(|&c| Some(c)).chain([None]).collect();
    let per: Vec<Option<Vec<(bool, usize, i32)>>> = (0..samples)
        .into_par_iter()
        .map(|r| {
            let soup = sampler.sample(alpha, seed, stream_id(1, r as u64)).ok()?;
            Some(
                levels
                    .iter()
                    .map(|c| {
                        let s = filter_by_diameter(&soup, None, c.map(f64::from)).expect("valid bounds");
                        let p = build_clusters(&s);
                        let big = largest_cluster_stats(&p);
                        let crosses = cluster_crosses_rect(&p, &s, &square, 1, Orientation::Horizontal);
                        (crosses, big.vertex_count, big.diameter)
                    })
                    .collect(),
            )
        })
        .collect();
    let failed = per.iter().filter(|o| o.is_none()).count();
    check_failures(failed, samples)?;
    let ok: Vec<Vec<(bool, usize, i32)>> = per.into_iter().flatten().collect();
    let k = ok.len().max(1) as f64;
    let rows = levels
        .iter()
        .enumerate()
        .map(|(i, &cutoff)| TruncationRow {
            cutoff,
            samples: ok.len(),
            crossing_freq: ok.iter().filter(|o| o[i].0).count() as f64 / k,
            mean_largest_vertices: ok.iter().map(|o| o[i].1 as f64).sum::<f64>() / k,
            mean_largest_diameter: ok.iter().map(|o| o[i].2 as f64).sum::<f64>() / k,
        })
        .collect();
    let per_replica = ok.iter().map(|o| o.iter().map(|&(c, v, _)| (c, v)).collect()).collect();
    Ok(TruncationTable { alpha, m: box_size, seed, rows, per_replica })
}

/// Edge-open probability of the back-and-forth minorant, `1 − (15/16)^α`.
pub fn bernoulli_minorant(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Precondition(format!("alpha = {alpha} must be >= 0")));
    }
    Ok(-(-alpha * edge_backforth_mass()).exp_m1())
}

/// Intensity at which the minorant reaches the square-lattice bond threshold 1/2.
pub fn bernoulli_threshold() -> f64 {
    std::f64::consts::LN_2 / (16.0f64 / 15.0).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorantSimulation {
    pub alpha: f64,
    pub edges: usize,
    pub open: usize,
    pub frequency: f64,
    pub expected: f64,
    pub sigma: f64,
}

impl MinorantSimulation {
    pub fn z_score(&self) -> f64 {
        if self.sigma == 0.0 {
            return if self.frequency == self.expected { 0.0 } else { f64::INFINITY };
        }
        (self.frequency - self.expected) / self.sigma
    }
}

/// Edges of `region` covered by a loop whose range is exactly that edge.
pub fn minorant_from_soup(
    region: Region,
    alpha: f64,
    samples: usize,
    seed: u64,
    config: SamplerConfig,
) -> Result<MinorantSimulation> {
    let expected = bernoulli_minorant(alpha)?;
    let edges = region.edges();
    let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), config)?;
    let verts = sampler.rates().region().vertices().to_vec();
    let open: usize = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<usize> {
            let soup = sampler.sample(alpha, seed, stream_id(2, r as u64))?;
            let mut hit = std::collections::HashSet::new();
            for l in &soup.loops {
                if let [a, b] = l.range()[..] {
                    hit.insert((a, b));
                }
            }
            Ok(edges.iter().filter(|&&(i, j)| hit.contains(&(verts[i].min(verts[j]), verts[i].max(verts[j])))).count())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let total = edges.len() * samples;
    let frequency = open as f64 / total.max(1) as f64;
    let sigma = (expected * (1.0 - expected) / total.max(1) as f64).sqrt();
    Ok(MinorantSimulation { alpha, edges: total, open, frequency, expected, sigma })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondPercolation {
    pub p: f64,
    pub width: u32,
    pub height: u32,
    pub samples: usize,
    pub open_frequency: f64,
    pub spanning_frequency: f64,
}

/// i.i.d. bond percolation on a `width × height` grid with left-right spanning.
pub fn iid_bond_percolation(p: f64, width: u32, height: u32, samples: usize, seed: u64) -> Result<BondPercolation> {
    if !(0.0..=1.0).contains(&p) || width < 2 || height < 1 || samples == 0 {
        return Err(Error::Precondition("need p in [0,1], width >= 2, height >= 1, samples >= 1".into()));
    }
    let (w, h) = (width as usize, height as usize);
    let results: Vec<(usize, usize, bool)> = (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, stream_id(3, r as u64));
            let mut uf = UnionFind::new(w * h + 2);
            let (left, right) = (w * h, w * h + 1);
            let (mut open, mut total) = (0, 0);
            for y in 0..h {
                uf.union(left, y * w);
                uf.union(right, y * w + w - 1);
                for x in 0..w {
                    let here = y * w + x;
                    let mut try_edge = |other: usize, uf: &mut UnionFind| {
                        total += 1;
                        if rng.random::<f64>() < p {
                            open += 1;
                            uf.union(here, other);
                        }
                    };
                    if x + 1 < w {
                        try_edge(here + 1, &mut uf);
                    }
                    if y + 1 < h {
                        try_edge(here + w, &mut uf);
                    }
                }
            }
            (open, total, uf.find(left) == uf.find(right))
        })
        .collect();
    let open: usize = results.iter().map(|r| r.0).sum();
    let total: usize = results.iter().map(|r| r.1).sum();
    let spans = results.iter().filter(|r| r.2).count();
    Ok(BondPercolation {
        p,
        width,
        height,
        samples,
        open_frequency: open as f64 / total.max(1) as f64,
        spanning_frequency: spans as f64 / samples as f64,
    })
}

/// Piecewise-linear loop in the plane, closed at its duration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousLoop {
    pub duration: f64,
    /// `(t, x, y)` control points at times `j/(2N²)`; last equals first in space.
    pub points: Vec<(f64, f64, f64)>,
}

impl ContinuousLoop {
    /// Position at time `t`, taken modulo the duration.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let t = t.rem_euclid(self.duration);
        let dt = self.points[1].0 - self.points[0].0;
        let j = ((t / dt).floor() as usize).min(self.points.len() - 2);
        let (t0, x0, y0) = self.points[j];
        let (_, x1, y1) = self.points[j + 1];
        let s = (t - t0) / dt;
        (x0 + s * (x1 - x0), y0 + s * (y1 - y0))
    }
}

/// `Φ_N`: rescale space by `1/N`, time by `1/(2N²)`, interpolate linearly.
pub fn interpolate_loop(l: &DiscreteLoop, n: u32) -> Result<ContinuousLoop> {
    if n < 1 {
        return Err(Error::Precondition("N must be >= 1".into()));
    }
    let nf = n as f64;
    let step = 1.0 / (2.0 * nf * nf);
    let vs = l.vertices();
    let points = (0..=vs.len())
        .map(|j| {
            let v = vs[j % vs.len()];
            (j as f64 * step, v.x as f64 / nf, v.y as f64 / nf)
        })
        .collect();
    Ok(ContinuousLoop { duration: vs.len() as f64 * step, points })
}
