use std::ops::Range;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{reduce, stream_at_word};

/// I.i.d. uniform spacer counts on `{0, …, alphabet − 1}`, regenerable at any index.
///
/// Symbol `i` is the `i`-th `u64` of the ChaCha stream `(seed, stream)`, so a chunk
/// `i..j` regenerated sequentially equals the elementwise singletons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpacerProcess {
    alphabet: u32,
    seed: u64,
    stream: u64,
}

impl SpacerProcess {
    pub fn new(alphabet: u32, seed: u64, stream: u64) -> Result<Self> {
        if alphabet < 1 {
            return Err(Error::param("alphabet", "spacer alphabet must be nonempty"));
        }
        Ok(SpacerProcess { alphabet, seed, stream })
    }

    /// Bernoulli(1/2) spacers on `{0, 1}`.
    pub fn binary(seed: u64, stream: u64) -> Self {
        SpacerProcess { alphabet: 2, seed, stream }
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn symbol(&self, index: u64) -> u32 {
        let mut rng = stream_at_word(self.seed, self.stream, u128::from(index) * 2);
        reduce(rng.next_u64(), u64::from(self.alphabet)) as u32
    }

    pub fn chunk(&self, range: Range<u64>) -> Vec<u32> {
        let mut rng = stream_at_word(self.seed, self.stream, u128::from(range.start) * 2);
        range
            .map(|_| reduce(rng.next_u64(), u64::from(self.alphabet)) as u32)
            .collect()
    }
}
