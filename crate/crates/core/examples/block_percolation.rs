//! Block percolation fields in both modes, with the open-path check.

use std::sync::Arc;

use loopsoup::blocks::{
    build_omega_global, hull_region, lss_dominated_p, spanning_open_path, witness_connectivity, BlockGrid, BlockSampler,
};
use loopsoup::io::omega_to_text;
use loopsoup::kernel::{build_kernel, pointed_rates};
use loopsoup::sampler::{SamplerConfig, SoupSampler};

fn main() -> loopsoup::Result<()> {
    let (n, alpha) = (4, 8.0);
    let grid = BlockGrid::new(5, 3)?;

    let hull = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(hull_region(n, &grid)))?), SamplerConfig::default())?;
    let soup = hull.sample(alpha, 2, 0)?;
    let global = build_omega_global(&soup, n, grid)?;
    print!("{}", omega_to_text(&global));
    println!("witness check: {:?}", witness_connectivity(&global, &soup)?);
    println!("spanning path: {:?}", spanning_open_path(&global));

    let block = BlockSampler::new(n, SamplerConfig::default())?;
    let fields: Vec<_> = (0..50).map(|r| block.omega_independent(alpha, grid, 2, r)).collect::<Result<_, _>>()?;
    let p = fields.iter().map(|f| f.open_fraction()).sum::<f64>() / fields.len() as f64;
    let spans = fields.iter().filter(|f| spanning_open_path(f).is_some()).count();
    println!("independent mode: open fraction {p:.3}, {spans} / 50 span");
    println!("dominated density (lss, heuristic): {:.4}", lss_dominated_p(p, "lss")?);
    Ok(())
}
