//! Seed derivation for named random sub-streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the
//! master seed and a stream name, so adding draws in one module never shifts
//! the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const VU_GEN: &str = "vu-gen";
pub const TASK_GEN: &str = "task-gen";
pub const SIM: &str = "sim";
pub const MONTE_CARLO: &str = "monte-carlo";
pub const INGEST: &str = "ingest";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn derive_seed(master: u64, stream: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(stream.as_bytes())))
}

/// Seed for item `index` of a stream (e.g. one Monte-Carlo trial).
pub fn derive_indexed(master: u64, stream: &str, index: u64) -> u64 {
    splitmix64(derive_seed(master, stream) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream(master: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, name))
}

pub fn indexed_stream(master: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_indexed(master, name, index))
}
