//! Rescaled piecewise-linear images of sampled loops, as JSON.

use std::sync::Arc;

use loopsoup::harness::interpolate_loop;
use loopsoup::kernel::{build_kernel, pointed_rates};
use loopsoup::lattice::{rect_region, RealRect};
use loopsoup::sampler::{SamplerConfig, SoupSampler};

fn main() -> loopsoup::Result<()> {
    let n = 8;
    let region = rect_region(&RealRect::new(0.0, 2.0, 0.0, 1.0)?, n);
    let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), SamplerConfig::default())?;
    let soup = sampler.sample(1.0, 4, 0)?;
    let mut images = soup.loops.iter().map(|l| interpolate_loop(l, n)).collect::<Result<Vec<_>, _>>()?;
    images.sort_by(|a, b| b.duration.total_cmp(&a.duration));
    images.truncate(3);
    for c in &images {
        eprintln!("duration {:.5}, position at half-time {:?}", c.duration, c.eval(c.duration / 2.0));
    }
    println!("{}", serde_json::to_string(&images)?);
    Ok(())
}
