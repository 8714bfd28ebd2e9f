//! Deterministic random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(seed, node, step, purpose)`. Streams are independent of the order in
//! which nodes are evaluated, so serial and parallel execution produce the
//! same trajectory, and a one-node cluster consumes exactly the same draws
//! as the centralized optimizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type RandomStream = ChaCha8Rng;

/// Node id reserved for the parameter server's own draws.
pub const SERVER_NODE: u64 = u64::MAX;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Stochastic-gradient sample indices.
    Sample = 1,
    /// Node-side compressor (Q1) coin flips.
    NodeCompress = 2,
    /// Server-side compressor (Q2) coin flips.
    ServerCompress = 3,
    /// Problem generation.
    Problem = 4,
    /// Anything outside a trajectory (tests, verification suites).
    Aux = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix the stream key into a single 64-bit seed.
pub fn derive_seed(seed: u64, node: u64, step: u64, purpose: Purpose) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ node);
    h = splitmix64(h ^ step);
    splitmix64(h ^ purpose as u64)
}

/// Open the stream for `(seed, node, step, purpose)`.
pub fn stream(seed: u64, node: u64, step: u64, purpose: Purpose) -> RandomStream {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, node, step, purpose))
}

/// A plain seeded stream for ad-hoc use.
pub fn seeded(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}
