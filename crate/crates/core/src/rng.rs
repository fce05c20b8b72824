//! Counter-derived random substreams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by the
//! master seed and a domain tag, and indexed by a counter (trial, grid point,
//! start index). Results therefore do not depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Domain tags keep unrelated consumers of the same seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Channel = 1,
    Detection = 2,
    Baseline = 3,
    MultiStart = 4,
    Symbols = 5,
    Sweep = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain as u64)));
    rng.set_stream(index);
    rng
}

/// A fresh 64-bit seed drawn from stream `index` of `domain`.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, domain, index).next_u64()
}
