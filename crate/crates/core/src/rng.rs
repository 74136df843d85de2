//! Counter-based random sub-streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! a 64-bit seed and addressed by a `(tag, index)` pair:
//!
//! ```text
//! key    = splitmix64 expansion of seed into 4 words
//! stream = (tag << 56) | index          (index < 2^56)
//! ```
//!
//! ChaCha streams with the same key and different stream ids are independent,
//! so a replicate or a block can be regenerated in isolation, in any order
//! and on any thread, and always yields the same numbers.
//!
//! Replicate seeds are derived from a master seed by [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a sub-stream. The discriminant occupies the top byte of the
/// ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamTag {
    /// Trajectory of the underlying process.
    Path = 1,
    /// Independent copy used by symmetrization.
    Copy = 2,
    /// Auxiliary uniforms and Gaussians of one coupling block.
    Block = 3,
    /// Initial point of an orbit (LSV) or initial state.
    Init = 4,
    /// Miscellaneous draws in tests and experiments.
    Aux = 5,
}

const INDEX_MASK: u64 = (1 << 56) - 1;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of child `index` in family `family` of `master`.
pub fn derive_seed(master: u64, family: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(family)).wrapping_add(index))
}

/// Opens the `(tag, index)` sub-stream of `seed`.
pub fn substream(seed: u64, tag: StreamTag, index: u64) -> ChaCha8Rng {
    debug_assert!(index <= INDEX_MASK, "sub-stream index overflow");
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((tag as u64) << 56) | (index & INDEX_MASK));
    rng
}
