//! Seeded substreams.
//!
//! Every replica draws from ChaCha8 keyed by the master seed, with the
//! replica index selecting the stream. Results therefore do not depend on
//! how replicas are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SoupRng = ChaCha8Rng;

pub fn substream(master_seed: u64, stream: u64) -> SoupRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for replica `replica` of task `task` (e.g. one grid edge).
pub fn stream_id(task: u64, replica: u64) -> u64 {
    (task << 40) ^ replica
}
