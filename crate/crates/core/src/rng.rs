//! Seeded, splittable random streams.
//!
//! A stream is a 64-bit seed. Child streams are derived by mixing the parent
//! seed with the child index through the SplitMix64 finalizer, and variates
//! come from xoshiro256++ whose state is expanded from the stream seed by
//! SplitMix64. Both steps are fully
//! specified, so equal seeds give equal variates on every platform and the
//! result of a computation never depends on how work was scheduled.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Generator = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent sub-stream number `index`.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(splitmix64(self.seed) ^ index.wrapping_mul(GOLDEN).rotate_left(17)),
        }
    }

    pub fn generator(&self) -> Generator {
        Xoshiro256PlusPlus::seed_from_u64(self.seed)
    }
}
