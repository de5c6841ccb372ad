//! The back-and-forth minorant: closed form, soup check, i.i.d. comparison.

use loopsoup::harness::{bernoulli_minorant, bernoulli_threshold, iid_bond_percolation, minorant_from_soup};
use loopsoup::lattice::{IntBox, Region};
use loopsoup::sampler::SamplerConfig;

fn main() -> loopsoup::Result<()> {
    println!("threshold alpha = ln 2 / ln(16/15) = {:.12}", bernoulli_threshold());
    for alpha in [1.0, 4.0, 10.74, 16.0] {
        let p = bernoulli_minorant(alpha)?;
        let region = Region::from_box(IntBox { x0: 0, x1: 9, y0: 1, y1: 6 });
        let sim = minorant_from_soup(region, alpha, 200, 1, SamplerConfig::default())?;
        let bonds = iid_bond_percolation(p, 30, 30, 200, 1)?;
        println!(
            "alpha {alpha:5}: p = {p:.4}, soup {:.4} (z = {:+.2}), spanning {:.3}",
            sim.frequency,
            sim.z_score(),
            bonds.spanning_frequency
        );
    }
    Ok(())
}
