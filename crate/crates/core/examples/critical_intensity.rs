//! Box-crossing curves and the level-1/2 intensity per box size.

use loopsoup::harness::estimate_alpha_c;
use loopsoup::sampler::SamplerConfig;

fn main() -> loopsoup::Result<()> {
    let grid: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
    let est = estimate_alpha_c(&[16, 32], &grid, 200, 5, SamplerConfig::default())?;
    for c in &est.curves {
        let hat = c.alpha_hat.map_or("out of grid".to_string(), |a| format!("{a:.3}"));
        println!("M = {}: alpha_hat = {hat} (target {})", c.m, est.target);
        for (a, p) in c.alphas.iter().zip(&c.p_hat).step_by(4) {
            println!("  alpha {a:4}: {p:.3}");
        }
    }
    Ok(())
}
