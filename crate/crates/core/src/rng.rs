//! Seeded random streams.
//!
//! Every random quantity in the library is drawn from a ChaCha8 stream. A run is
//! identified by a single `u64` seed; independent work items (trajectories, trials,
//! tomography records) use the stream selected by their index, so results do not
//! depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for the run-level stream of `seed`.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for work item `index` of the run identified by `seed`.
///
/// Stream 0 is reserved for [`seeded`], so item `i` uses stream `i + 1`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
