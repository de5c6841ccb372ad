//! Total loop mass of a region and its per-vertex decomposition.
//!
//! cargo run --example exact_mass -- 2

use loopsoup::kernel::{build_kernel, pointed_rates, total_loop_mass, vertex_hit_mass};
use loopsoup::lattice::{rect_region, RealRect, Region, Vertex};

fn main() -> loopsoup::Result<()> {
    let n: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);

    let edge = Region::from_vertices([Vertex::new(0, 1), Vertex::new(1, 1)])?;
    let m = total_loop_mass(&build_kernel(edge))?;
    println!("two-vertex mass {m:.15} (ln 16/15 = {:.15})", (16.0f64 / 15.0).ln());

    let region = rect_region(&RealRect::new(0.0, 6.0, 0.0, 3.0)?, n);
    let kernel = build_kernel(region);
    let mass = total_loop_mass(&kernel)?;
    let rates = pointed_rates(&kernel)?;
    println!("N*Q_ext at N = {n}: {} vertices", kernel.len());
    println!("  -log det(I - P)      = {mass:.12}");
    println!("  sum_i log 1/(1 - r_i) = {:.12}", rates.total());
    let centre = Vertex::new(3 * n as i32, (3 * n as i32) / 2);
    println!("  mass of loops through {centre}: {:.6}", vertex_hit_mass(&kernel, centre)?);
    Ok(())
}
