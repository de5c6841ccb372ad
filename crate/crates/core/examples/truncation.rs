//! How diameter-truncated soups recover the crossing statistics.

use loopsoup::harness::truncation_experiment;
use loopsoup::sampler::SamplerConfig;

fn main() -> loopsoup::Result<()> {
    let t = truncation_experiment(3.0, &[1, 2, 4, 8, 16, 32], 24, 200, 3, SamplerConfig::default())?;
    println!("cutoff  crossing  largest cluster (vertices, diameter)");
    for r in &t.rows {
        let c = r.cutoff.map_or("none".to_string(), |c| c.to_string());
        println!("{c:>6}  {:8.3}  ({:.1}, {:.1})", r.crossing_freq, r.mean_largest_vertices, r.mean_largest_diameter);
    }
    Ok(())
}
