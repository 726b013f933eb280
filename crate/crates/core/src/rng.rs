//! Counter-based random streams.
//!
//! Every random draw in a chain is addressed by `(iteration, block, index)`.
//! The address selects a ChaCha8 stream keyed by the root seed, so draws for
//! different coordinates never share state and can be produced in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which block of the sampler a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Block {
    Tau = 0,
    Omega = 1,
    Eta = 2,
    Aux = 3,
}

const INDEX_BITS: u32 = 30;
const MAX_INDEX: u64 = (1 << INDEX_BITS) - 1;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `chain` in a multi-chain run; chain 0 keeps the run seed.
pub fn chain_seed(seed: u64, chain: u64) -> u64 {
    if chain == 0 {
        seed
    } else {
        mix64(seed ^ mix64(chain))
    }
}

/// Root of a tree of independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamRoot {
    seed: u64,
    key: [u8; 32],
}

impl StreamRoot {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Root for an independent chain derived from this one.
    pub fn chain(&self, chain: u64) -> Self {
        Self::new(chain_seed(self.seed, chain))
    }

    /// The stream for one coordinate of one block at one iteration.
    ///
    /// Iterations must fit in 32 bits and indices in 30 bits.
    pub fn stream(&self, iteration: u64, block: Block, index: u64) -> ChaCha8Rng {
        debug_assert!(iteration <= u32::MAX as u64);
        debug_assert!(index <= MAX_INDEX);
        let id = (iteration << 32) | ((block as u64) << INDEX_BITS) | (index & MAX_INDEX);
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }

    /// A single sequential stream, for callers that do not need addressing.
    pub fn sequential(&self) -> ChaCha8Rng {
        self.stream(u32::MAX as u64, Block::Aux, MAX_INDEX)
    }
}
