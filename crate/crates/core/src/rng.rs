//! Seed fan-out. Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(seed, stream)`, so results depend only on the seed and the sample index,
//! never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an independent seed for a named sub-experiment (bootstrap, limit
/// draws, ...) so the two stages never share a stream.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // splitmix64 over the label bytes
    let mut z = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in label.bytes() {
        z = z.wrapping_add(b as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z ^= z >> 31;
    }
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
