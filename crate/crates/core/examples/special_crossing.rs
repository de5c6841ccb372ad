//! Evaluate the special crossing event on block soups and show a witness.

use loopsoup::blocks::BlockSampler;
use loopsoup::crossing::crossing_events;
use loopsoup::sampler::SamplerConfig;

fn main() -> loopsoup::Result<()> {
    let n = 6;
    let block = BlockSampler::new(n, SamplerConfig::default())?;
    let spec = block.spec();
    let mut hits = 0;
    for r in 0..200 {
        let soup = block.soup_sampler().sample(8.0, 1, r)?;
        let w = crossing_events(&soup, &spec);
        if w.satisfied() {
            if hits == 0 {
                println!("replica {r}: witness uses {} of {} loops", w.loops().len(), soup.len());
                println!("  C1 cluster + connectors: {:?}", w.c1.witness);
            }
            hits += 1;
        }
    }
    println!("N = {n}, alpha = 8: special crossing in {hits} / 200 replicas");
    Ok(())
}
