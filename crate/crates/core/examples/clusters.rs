//! Cluster statistics of soups at increasing intensity, coupled.

use std::sync::Arc;

use loopsoup::cluster::{build_clusters, largest_cluster_stats};
use loopsoup::kernel::{build_kernel, pointed_rates};
use loopsoup::lattice::{IntBox, Region};
use loopsoup::sampler::{SamplerConfig, SoupSampler};

fn main() -> loopsoup::Result<()> {
    let region = Region::from_box(IntBox { x0: 0, x1: 39, y0: 1, y1: 20 });
    let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), SamplerConfig::default())?;
    let marked = sampler.sample_marked(4.0, 3, 0)?;
    println!("alpha  loops  clusters  largest(vertices, diameter)");
    for alpha in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let soup = marked.at(alpha);
        let p = build_clusters(&soup);
        let big = largest_cluster_stats(&p);
        println!("{alpha:5}  {:5}  {:8}  ({}, {})", soup.len(), p.cluster_count(), big.vertex_count, big.diameter);
    }
    Ok(())
}
