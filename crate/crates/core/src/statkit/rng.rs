//! Reproducible random substreams.
//!
//! A stream is a xoshiro256++ generator whose state is expanded by SplitMix64
//! from a hash of `(master_seed, stream_id)`, so that pair alone fixes the
//! sequence. Child streams hash in their index the same way.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix two words into one with full avalanche.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut s = a ^ b.wrapping_mul(GOLDEN).rotate_left(29);
    splitmix64(&mut s) ^ splitmix64(&mut s)
}

fn key_from(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// One independent, reproducible random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let rng = Xoshiro256PlusPlus::from_seed(key_from(mix_seed(master_seed, stream_id)));
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream derived from this stream's identity and `index`.
    ///
    /// The child depends only on `(master_seed, stream_id, index)`, not on
    /// how much of the parent has been consumed.
    pub fn substream(&self, index: u64) -> RngStream {
        let key = mix_seed(mix_seed(self.master_seed, self.stream_id), index.wrapping_add(1));
        RngStream {
            master_seed: self.master_seed,
            stream_id: self.stream_id,
            rng: Xoshiro256PlusPlus::from_seed(key_from(key ^ 0x5ca1_ab1e_0dd5_eed5)),
        }
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
