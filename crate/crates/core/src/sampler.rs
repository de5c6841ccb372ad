//! Exact sampling of the loop soup restricted to a finite region.
//!
//! The pointed sampler walks the elimination order `v_1, …, v_n`. Vertex
//! `v_i` receives `Poisson(α λ_i)` loops; each one returns `k` times to
//! `v_i`, with `k` logarithmic of parameter `r_i`, and is the concatenation
//! of `k` independent excursions of simple random walk from `v_i`
//! conditioned to come back before leaving `G_i = {v_i, …, v_n}`. Loops are
//! rooted at their generating vertex.
//!
//! The enumeration sampler is an independent route for tiny regions: every
//! rooted loop of length `m ≤ L_max` receives an independent
//! `Poisson(α 4^{-m}/m)` multiplicity.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::kernel::PointedRates;
use crate::lattice::{loop_contained, loop_diameter, DiscreteLoop, IntBox, Region, Vertex};
use crate::rng::{substream, SoupRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Provenance {
    Pointed,
    Enumeration,
    Handcrafted,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Pointed => "pointed",
            Provenance::Enumeration => "enumeration",
            Provenance::Handcrafted => "handcrafted",
        }
    }
}

/// A finite Poisson ensemble of loops contained in `region`.
#[derive(Debug, Clone)]
pub struct LoopSoup {
    pub region: Arc<Region>,
    pub alpha: f64,
    pub loops: Vec<DiscreteLoop>,
    pub seed: u64,
    pub stream: u64,
    pub provenance: Provenance,
}

impl LoopSoup {
    pub fn empty(region: Arc<Region>, alpha: f64, seed: u64, stream: u64) -> Self {
        Self { region, alpha, loops: Vec::new(), seed, stream, provenance: Provenance::Pointed }
    }

    /// A soup assembled by hand; every loop must lie in the region.
    pub fn handcrafted(region: Arc<Region>, loops: Vec<DiscreteLoop>) -> Result<Self> {
        if let Some(l) = loops.iter().find(|l| !loop_contained(l, &region)) {
            return Err(Error::Precondition(format!(
                "loop rooted at {} leaves the region",
                l.root()
            )));
        }
        Ok(Self { region, alpha: 0.0, loops, seed: 0, stream: 0, provenance: Provenance::Handcrafted })
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn with_loops(&self, loops: Vec<DiscreteLoop>) -> Self {
        Self {
            region: Arc::clone(&self.region),
            alpha: self.alpha,
            loops,
            seed: self.seed,
            stream: self.stream,
            provenance: self.provenance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    /// Consecutive rejected excursion attempts tolerated before failing.
    pub max_rejections: u64,
    /// Longest single excursion attempt, in steps.
    pub max_steps: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { max_rejections: 10_000_000, max_steps: 100_000_000 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rejections == 0 || self.max_steps == 0 {
            return Err(Error::Precondition("sampler caps must be >= 1".into()));
        }
        Ok(())
    }
}

const OUTSIDE: u32 = u32::MAX;

/// Reusable sampler over precomputed rates.
///
/// Holds a padded grid mapping each lattice site to its rank in the
/// elimination order, so the excursion inner loop is a table lookup.
#[derive(Debug, Clone)]
pub struct SoupSampler {
    rates: Arc<PointedRates>,
    origin: (i32, i32),
    width: usize,
    rank: Vec<u32>,
    cumulative: Vec<f64>,
    config: SamplerConfig,
}

impl SoupSampler {
    pub fn new(rates: Arc<PointedRates>, config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        let bbox = rates.region().bbox().unwrap_or(IntBox { x0: 0, x1: 0, y0: 1, y1: 1 });
        let origin = (bbox.x0 - 1, bbox.y0 - 1);
        let width = bbox.width() + 2;
        let height = bbox.height() + 2;
        let mut rank = vec![OUTSIDE; width * height];
        for (i, v) in rates.ordering().iter().enumerate() {
            rank[(v.y - origin.1) as usize * width + (v.x - origin.0) as usize] = i as u32;
        }
        let mut cumulative = Vec::with_capacity(rates.len());
        let mut acc = 0.0;
        for l in &rates.lambda {
            acc += l;
            cumulative.push(acc);
        }
        Ok(Self { rates, origin, width, rank, cumulative, config })
    }

    pub fn rates(&self) -> &PointedRates {
        &self.rates
    }

    #[inline]
    fn site(&self, v: Vertex) -> usize {
        (v.y - self.origin.1) as usize * self.width + (v.x - self.origin.0) as usize
    }

    #[inline]
    fn vertex(&self, site: usize) -> Vertex {
        Vertex {
            x: (site % self.width) as i32 + self.origin.0,
            y: (site / self.width) as i32 + self.origin.1,
        }
    }

    /// Draws the loops of the soup at intensity `alpha` from `rng`.
    pub fn sample_loops(&self, alpha: f64, rng: &mut SoupRng) -> Result<Vec<DiscreteLoop>> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Precondition(format!("alpha must be a finite value >= 0, got {alpha}")));
        }
        let total = self.cumulative.last().copied().unwrap_or(0.0);
        if alpha == 0.0 || total <= 0.0 {
            return Ok(Vec::new());
        }
        // Σ_i Poisson(α λ_i) split multinomially is the same law as
        // independent per-vertex counts.
        let count = Poisson::new(alpha * total)
            .map_err(|e| Error::Numerical(format!("poisson mean: {e}")))?
            .sample(rng) as usize;
        let mut roots: Vec<usize> = (0..count)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
            })
            .collect();
        roots.sort_unstable();
        let mut loops = Vec::with_capacity(count);
        let mut path = Vec::new();
        for i in roots {
            let ri = self.rates.r[i];
            if ri <= 0.0 {
                // λ_i = 0 has zero probability of being selected
                continue;
            }
            let visits = sample_logarithmic(ri, self.rates.lambda[i], rng);
            path.clear();
            for _ in 0..visits {
                self.excursion_into(i, rng, &mut path)?;
            }
            loops.push(DiscreteLoop::from_checked(path.iter().map(|&s| self.vertex(s)).collect()));
        }
        Ok(loops)
    }

    /// Appends one excursion from `v_i` (root included, final return
    /// excluded) to `path`, by rejection.
    fn excursion_into(&self, i: usize, rng: &mut SoupRng, path: &mut Vec<usize>) -> Result<()> {
        let root = self.site(self.rates.ordering()[i]);
        let w = self.width as isize;
        let moves = [1isize, -1, w, -w];
        let rank_i = i as u32;
        let start = path.len();
        let mut rejections = 0u64;
        loop {
            path.truncate(start);
            path.push(root);
            let mut cur = root;
            let mut steps = 0u64;
            let mut bits = 0u32;
            let mut left = 0u32;
            let accepted = loop {
                if left == 0 {
                    bits = rng.random::<u32>();
                    left = 16;
                }
                let d = (bits & 3) as usize;
                bits >>= 2;
                left -= 1;
                cur = (cur as isize + moves[d]) as usize;
                steps += 1;
                let rk = self.rank[cur];
                if rk == OUTSIDE || rk < rank_i {
                    break false;
                }
                if rk == rank_i {
                    break true;
                }
                if steps >= self.config.max_steps {
                    return Err(Error::SamplingFailure(format!(
                        "excursion from {} exceeded {} steps",
                        self.vertex(root),
                        self.config.max_steps
                    )));
                }
                path.push(cur);
            };
            if accepted {
                return Ok(());
            }
            rejections += 1;
            if rejections >= self.config.max_rejections {
                return Err(Error::SamplingFailure(format!(
                    "{} consecutive rejected excursions from {}",
                    rejections,
                    self.vertex(root)
                )));
            }
        }
    }

    /// One excursion from the `i`-th vertex of the elimination order.
    pub fn sample_excursion(&self, i: usize, rng: &mut SoupRng) -> Result<Vec<Vertex>> {
        if self.rates.r.get(i).is_none_or(|&r| r <= 0.0) {
            return Err(Error::Precondition(format!("vertex {i} has no excursions (r_i = 0)")));
        }
        let mut path = Vec::new();
        self.excursion_into(i, rng, &mut path)?;
        Ok(path.into_iter().map(|s| self.vertex(s)).collect())
    }

    pub fn sample(&self, alpha: f64, seed: u64, stream: u64) -> Result<LoopSoup> {
        let mut rng = substream(seed, stream);
        let loops = self.sample_loops(alpha, &mut rng)?;
        Ok(LoopSoup {
            region: self.rates.region_arc(),
            alpha,
            loops,
            seed,
            stream,
            provenance: Provenance::Pointed,
        })
    }

    /// Soup at `alpha_max` with each loop carrying a uniform mark on
    /// `[0, alpha_max)`; the soup at `α ≤ alpha_max` is the loops with
    /// mark `< α`.
    pub fn sample_marked(&self, alpha_max: f64, seed: u64, stream: u64) -> Result<MarkedSoup> {
        let mut rng = substream(seed, stream);
        let loops = self.sample_loops(alpha_max, &mut rng)?;
        let marks = loops.iter().map(|_| rng.random::<f64>() * alpha_max).collect();
        Ok(MarkedSoup {
            soup: LoopSoup {
                region: self.rates.region_arc(),
                alpha: alpha_max,
                loops,
                seed,
                stream,
                provenance: Provenance::Pointed,
            },
            marks,
        })
    }
}

/// Logarithmic law `P(k) = r^k / (k λ)`, `λ = −log(1 − r)`, by inverse CDF.
pub fn sample_logarithmic<R: Rng + ?Sized>(r: f64, lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 1u64;
    let mut p = r / lambda;
    let mut cum = p;
    while u > cum && p > 0.0 {
        p *= r * k as f64 / (k + 1) as f64;
        k += 1;
        cum += p;
    }
    k
}

/// Intensity-coupled soups, see [`SoupSampler::sample_marked`].
#[derive(Debug, Clone)]
pub struct MarkedSoup {
    pub soup: LoopSoup,
    pub marks: Vec<f64>,
}

impl MarkedSoup {
    pub fn at(&self, alpha: f64) -> LoopSoup {
        let loops = self
            .soup
            .loops
            .iter()
            .zip(&self.marks)
            .filter(|(_, &m)| m < alpha)
            .map(|(l, _)| l.clone())
            .collect();
        let mut s = self.soup.with_loops(loops);
        s.alpha = alpha;
        s
    }

    /// Loop indices sorted by mark.
    pub fn arrival_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.marks.len()).collect();
        idx.sort_by(|&a, &b| self.marks[a].total_cmp(&self.marks[b]));
        idx
    }
}

pub fn sample_soup(rates: Arc<PointedRates>, alpha: f64, seed: u64, config: SamplerConfig) -> Result<LoopSoup> {
    SoupSampler::new(rates, config)?.sample(alpha, seed, 0)
}

/// Nested soups at strictly ascending intensities.
pub fn sample_soup_coupled(
    rates: Arc<PointedRates>,
    alphas: &[f64],
    seed: u64,
    config: SamplerConfig,
) -> Result<Vec<LoopSoup>> {
    check_ascending(alphas)?;
    let Some(&top) = alphas.last() else {
        return Ok(Vec::new());
    };
    let marked = SoupSampler::new(rates, config)?.sample_marked(top, seed, 0)?;
    Ok(alphas.iter().map(|&a| marked.at(a)).collect())
}

pub(crate) fn check_ascending(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::Precondition("intensities must be finite and >= 0".into()));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("intensities must be strictly ascending".into()));
    }
    Ok(())
}

/// Keeps loops with `min_d ≤ diameter ≤ max_d`.
pub fn filter_by_diameter(soup: &LoopSoup, min_d: Option<f64>, max_d: Option<f64>) -> Result<LoopSoup> {
    if let (Some(lo), Some(hi)) = (min_d, max_d) {
        if lo > hi {
            return Err(Error::Precondition(format!("min diameter {lo} exceeds max {hi}")));
        }
    }
    let keep = |l: &DiscreteLoop| {
        let d = loop_diameter(l);
        min_d.is_none_or(|lo| d >= lo) && max_d.is_none_or(|hi| d <= hi)
    };
    Ok(soup.with_loops(soup.loops.iter().filter(|l| keep(l)).cloned().collect()))
}

/// Exact walk counts for the enumeration sampler.
#[derive(Debug, Clone)]
pub struct LoopEnumeration {
    region: Arc<Region>,
    l_max: usize,
    adj: Vec<Vec<usize>>,
    // walks[t][a * n + b]: number of length-t walks a -> b inside the region
    walks: Vec<Vec<u64>>,
    // (root, length, rate per unit α)
    classes: Vec<(usize, usize, f64)>,
    class_cumulative: Vec<f64>,
}

/// Mass bookkeeping for a truncated enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationReport {
    /// `α Σ_{m ≤ L_max} tr(P^m)/m`.
    pub enumerated_mass: f64,
    /// `α m(A) −` enumerated mass, given the exact total mass.
    pub deficit: f64,
    /// Rigorous upper bound on `α Σ_{m > L_max} tr(P^m)/m`.
    pub tail_bound: f64,
}

pub const ENUMERATION_MAX_VERTICES: usize = 12;
pub const ENUMERATION_MAX_LENGTH: usize = 16;

impl LoopEnumeration {
    pub fn new(region: Arc<Region>, l_max: usize) -> Result<Self> {
        let n = region.len();
        if n > ENUMERATION_MAX_VERTICES || l_max > ENUMERATION_MAX_LENGTH || !l_max.is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "enumeration needs <= {ENUMERATION_MAX_VERTICES} vertices and even L_max <= \
                 {ENUMERATION_MAX_LENGTH}; got {n} vertices, L_max = {l_max}"
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for (a, b) in region.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut walks = Vec::with_capacity(l_max + 1);
        let mut id = vec![0u64; n * n];
        for i in 0..n {
            id[i * n + i] = 1;
        }
        walks.push(id);
        for t in 1..=l_max {
            let prev = &walks[t - 1];
            let mut cur = vec![0u64; n * n];
            for a in 0..n {
                for &c in &adj[a] {
                    for b in 0..n {
                        cur[a * n + b] += prev[c * n + b];
                    }
                }
            }
            walks.push(cur);
        }
        let mut classes = Vec::new();
        for root in 0..n {
            for m in (2..=l_max).step_by(2) {
                let c = walks[m][root * n + root];
                if c > 0 {
                    classes.push((root, m, c as f64 * 4f64.powi(-(m as i32)) / m as f64));
                }
            }
        }
        let mut acc = 0.0;
        let class_cumulative = classes
            .iter()
            .map(|c| {
                acc += c.2;
                acc
            })
            .collect();
        Ok(Self { region, l_max, adj, walks, classes, class_cumulative })
    }

    /// Every rooted loop of length `≤ L_max`, materialised; for small cases.
    pub fn rooted_loops(&self) -> Vec<DiscreteLoop> {
        let vs = self.region.vertices();
        let mut out = Vec::new();
        let mut stack = Vec::new();
        fn rec(
            e: &LoopEnumeration,
            root: usize,
            len: usize,
            stack: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let cur = *stack.last().unwrap();
            let remaining = len - (stack.len() - 1);
            if remaining == 0 {
                if cur == root {
                    let mut p = stack.clone();
                    p.pop();
                    out.push(p);
                }
                return;
            }
            let n = e.region.len();
            for &nb in &e.adj[cur] {
                if e.walks[remaining - 1][nb * n + root] > 0 {
                    stack.push(nb);
                    rec(e, root, len, stack, out);
                    stack.pop();
                }
            }
        }
        let mut raw = Vec::new();
        for &(root, m, _) in &self.classes {
            stack.clear();
            stack.push(root);
            rec(self, root, m, &mut stack, &mut raw);
        }
        for p in raw {
            out.push(DiscreteLoop::from_checked(p.into_iter().map(|i| vs[i]).collect()));
        }
        out
    }

    /// `Σ_{m ≤ L_max} tr(P^m)/m`.
    pub fn mass(&self) -> f64 {
        self.class_cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn report(&self, alpha: f64, exact_total_mass: f64) -> EnumerationReport {
        let n = self.region.len();
        let enumerated = alpha * self.mass();
        // ρ(P) ≤ ‖P^L‖_∞^{1/L}
        let tail_bound = if self.l_max == 0 {
            f64::INFINITY
        } else {
            let l = self.l_max;
            let norm = (0..n)
                .map(|a| self.walks[l][a * n..(a + 1) * n].iter().sum::<u64>() as f64)
                .fold(0.0, f64::max)
                * 4f64.powi(-(l as i32));
            let rho = norm.powf(1.0 / l as f64);
            if rho >= 1.0 {
                f64::INFINITY
            } else {
                alpha * n as f64 * rho.powi(l as i32 + 1) / ((l + 1) as f64 * (1.0 - rho))
            }
        };
        EnumerationReport {
            enumerated_mass: enumerated,
            deficit: alpha * exact_total_mass - enumerated,
            tail_bound,
        }
    }

    pub fn sample_loops(&self, alpha: f64, rng: &mut SoupRng) -> Result<Vec<DiscreteLoop>> {
        if !(alpha >= 0.0) {
            return Err(Error::Precondition(format!("alpha must be >= 0, got {alpha}")));
        }
        let total = self.mass();
        if alpha == 0.0 || total == 0.0 {
            return Ok(Vec::new());
        }
        let count = Poisson::new(alpha * total)
            .map_err(|e| Error::Numerical(format!("poisson mean: {e}")))?
            .sample(rng) as usize;
        let n = self.region.len();
        let vs = self.region.vertices();
        let mut loops = Vec::with_capacity(count);
        for _ in 0..count {
            let u = rng.random::<f64>() * total;
            let c = self.class_cumulative.partition_point(|&x| x <= u).min(self.classes.len() - 1);
            let (root, m, _) = self.classes[c];
            // uniform closed walk of length m from root, by backward counts
            let mut path = Vec::with_capacity(m);
            let mut cur = root;
            for step in 0..m {
                path.push(vs[cur]);
                let remaining = m - step - 1;
                let total_w = self.walks[remaining + 1][cur * n + root];
                let mut pick = rng.random_range(0..total_w);
                let mut next = usize::MAX;
                for &nb in &self.adj[cur] {
                    let w = self.walks[remaining][nb * n + root];
                    if pick < w {
                        next = nb;
                        break;
                    }
                    pick -= w;
                }
                debug_assert!(next != usize::MAX);
                cur = next;
            }
            debug_assert_eq!(cur, root);
            loops.push(DiscreteLoop::from_checked(path));
        }
        Ok(loops)
    }
}

pub fn enumeration_sampler(
    region: Arc<Region>,
    alpha: f64,
    l_max: usize,
    seed: u64,
) -> Result<LoopSoup> {
    let e = LoopEnumeration::new(Arc::clone(&region), l_max)?;
    let mut rng = substream(seed, 0);
    let loops = e.sample_loops(alpha, &mut rng)?;
    Ok(LoopSoup { region, alpha, loops, seed, stream: 0, provenance: Provenance::Enumeration })
}
