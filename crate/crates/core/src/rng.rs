//! Seeded random streams.
//!
//! Every stochastic routine consumes a [`ChaCha8Rng`]. Independent work items
//! (Monte Carlo trials, tail-bound grid cells) use the substream rule
//!
//! ```text
//! substream(master, index) = ChaCha8Rng::seed_from_u64(master) with stream = index
//! ```
//!
//! so results depend only on `(master, index)` and never on scheduling.

pub use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}
