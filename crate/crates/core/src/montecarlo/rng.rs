//! Counter-based replicate streams.
//!
//! Every replicate owns a fixed window of a ChaCha8 keystream addressed by
//! `(seed, domain, stream, replicate)`, so its draws do not depend on how
//! replicates are chunked or scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// log2 of the number of 32-bit keystream words reserved per replicate.
const WORDS_PER_REPLICATE_LOG2: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Domain {
    Null = 1,
    Rejection = 2,
    Simulation = 3,
}

pub(crate) fn stream_rng(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) ^ stream);
    rng
}

/// Positions `rng` at the start of replicate `r`'s window.
pub(crate) fn seek_replicate(rng: &mut ChaCha8Rng, r: usize) {
    rng.set_word_pos((r as u128) << WORDS_PER_REPLICATE_LOG2);
}

/// splitmix64 finalizer, used to derive independent seeds.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
