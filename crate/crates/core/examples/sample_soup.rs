//! Sample a loop soup and print it in the text format.

use std::sync::Arc;

use loopsoup::io::soup_to_text;
use loopsoup::kernel::{build_kernel, pointed_rates};
use loopsoup::lattice::{loop_diameter, IntBox, Region};
use loopsoup::sampler::{SamplerConfig, SoupSampler};

fn main() -> loopsoup::Result<()> {
    let region = Region::from_box(IntBox { x0: 0, x1: 11, y0: 1, y1: 6 });
    let rates = Arc::new(pointed_rates(&build_kernel(region))?);
    let sampler = SoupSampler::new(rates, SamplerConfig::default())?;
    let soup = sampler.sample(1.0, 7, 0)?;
    let longest = soup.loops.iter().map(|l| l.jumps()).max().unwrap_or(0);
    let widest = soup.loops.iter().map(loop_diameter).fold(0.0, f64::max);
    eprintln!("{} loops, longest {longest} steps, widest diameter {widest}", soup.len());
    print!("{}", soup_to_text(&soup));
    Ok(())
}
