//! Reproducible random streams for batches of independent runs.
//!
//! Run `i` of a batch with master seed `s` draws from ChaCha8 keyed by
//! `seed_from_u64(s)` on stream `i`. Streams of one key never overlap, so
//! results depend only on `(s, i)` and not on how runs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(master_seed: u64, run_index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}
