//! Per-iteration random streams.
//!
//! Every random decision of a run is drawn from a ChaCha stream keyed by
//! `(seed, iteration, purpose)`. A run is therefore a pure function of its
//! seed, and patches for different iterations can be produced in any order
//! (or concurrently) without changing the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Observations = 0,
    Features = 1,
    Selector = 2,
    Replicate = 3,
}

const PURPOSES: u64 = 4;

pub fn stream(seed: u64, iteration: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}
