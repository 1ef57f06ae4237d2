//! Counter-based deterministic randomness.
//!
//! Every random draw in the crate is addressed by `(seed, stream, index)`. The
//! generator is ChaCha12 keyed by the seed; the stream id selects the ChaCha
//! nonce and the index selects a private window of `2^20` words inside that
//! stream. Draw `i` therefore never depends on how many workers ran or in what
//! order the other draws were taken.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Written into every report so runs can be audited.
pub const RNG_ALGORITHM: &str = "chacha12-counter/v1";

const WINDOW_BITS: u32 = 20;

/// Well-known stream ids. Spacer processes use their own ids (the stage index).
pub mod streams {
    pub const LEVEL_SAMPLING: u64 = 0x4c45_5645_4c00_0000;
    pub const SEARCH_TRIALS: u64 = 0x5345_4152_4348_0000;
    pub const MARKOV_MC: u64 = 0x4d41_524b_4f56_0000;
    pub const HOEFFDING_MC: u64 = 0x484f_4546_4600_0000;
}

/// Generator positioned at the start of the window for `(seed, stream, index)`.
pub fn counter_rng(seed: u64, stream: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << WINDOW_BITS);
    rng
}

/// Generator positioned at an absolute word offset of a stream, for sequential
/// regeneration of chunks.
pub(crate) fn stream_at_word(seed: u64, stream: u64, word: u128) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word);
    rng
}

/// Maps a uniform `u64` onto `[0, n)` by multiply-shift.
#[inline]
pub(crate) fn reduce(x: u64, n: u64) -> u64 {
    ((u128::from(x) * u128::from(n)) >> 64) as u64
}
