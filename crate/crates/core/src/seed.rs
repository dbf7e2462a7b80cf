//! Root-seed fan-out.
//!
//! A single experiment seed is split into named sub-seeds (`"data"`,
//! `"trust"`, `"channel"`, `"rl"`, `"fl"`, ...) so each component draws from
//! its own stream. Changing how many numbers one component consumes never
//! shifts the randomness seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Named sub-seed derivation from a root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        SeedTree { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn derive(&self, name: &str) -> u64 {
        splitmix64(self.root ^ fnv1a(name.as_bytes()))
    }

    pub fn child(&self, name: &str) -> SeedTree {
        SeedTree::new(self.derive(name))
    }

    pub fn rng(&self, name: &str) -> SimRng {
        SimRng::seed_from_u64(self.derive(name))
    }
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
