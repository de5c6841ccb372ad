//! Special-crossing probabilities p_N(alpha) with Wilson intervals.

use loopsoup::harness::{convergence_diagnostic, sweep_crossing_probability};
use loopsoup::sampler::SamplerConfig;

fn main() -> loopsoup::Result<()> {
    let cfg = SamplerConfig::default();
    let sweep = sweep_crossing_probability(&[1.0, 2.0, 4.0, 8.0], &[4, 6, 8], 400, 11, cfg)?;
    println!("alpha  N  p_hat   95% CI");
    for r in &sweep.rows {
        println!("{:5}  {}  {:.4}  [{:.4}, {:.4}]", r.alpha, r.n, r.p_hat, r.ci_low, r.ci_high);
    }
    println!("coupling violations: {}", sweep.monotonicity_violations());
    for row in convergence_diagnostic(&[4, 6, 8], 4.0, 400, 11, cfg)? {
        println!("N = {}: p = {:.4}, change {:+.4}", row.n, row.p_hat, row.diff.unwrap_or(0.0));
    }
    Ok(())
}
