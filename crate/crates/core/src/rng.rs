//! Seeded random streams.
//!
//! All randomness flows from an explicit master seed. Independent work items
//! (trials, matrix blocks) get their own ChaCha stream selected by index, so
//! results do not depend on scheduling or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream `index` of the generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a fresh seed from `parent`, for use with [`stream`].
pub fn fork<R: RngCore + ?Sized>(parent: &mut R) -> u64 {
    parent.next_u64()
}
