//! Named random substreams derived from one global seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a, so stream derivation never depends on std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed of the substream `stage` under `seed`.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    fnv1a(stage.as_bytes()) ^ seed.rotate_left(17) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Independent generator for `stage`. Drawing from one stage never shifts
/// another.
pub fn substream(seed: u64, stage: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stage_seed(seed, stage))
}
