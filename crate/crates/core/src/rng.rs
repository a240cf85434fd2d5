//! Seed derivation. Every random stream is identified by a master seed and a
//! stream index, so results never depend on scheduling or thread count.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::LetterDist;

pub type Rng = ChaCha8Rng;

/// Stream tags keeping independent experiments on disjoint stream ranges.
pub mod tag {
    pub const PSI: u64 = 1;
    pub const XI: u64 = 2;
    pub const DIRECT_MC: u64 = 3;
    pub const IMPORTANCE: u64 = 4;
    pub const LAW: u64 = 5;
    pub const BETA: u64 = 6;
    pub const PAIR: u64 = 7;
}

/// Generator for stream `index` under `tag`.
pub fn stream(master: u64, tag: u64, index: u64) -> Rng {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag << 48 | index);
    rng
}

/// Sampler for i.i.d. letters under a distribution.
#[derive(Debug, Clone)]
pub struct LetterSampler {
    index: WeightedIndex<f64>,
}

impl LetterSampler {
    pub fn new(dist: &LetterDist) -> Self {
        Self { index: WeightedIndex::new(dist.probs()).expect("validated distribution") }
    }

    #[inline]
    pub fn sample(&self, rng: &mut Rng) -> u8 {
        self.index.sample(rng) as u8
    }

    pub fn fill(&self, rng: &mut Rng, out: &mut [u8]) {
        for v in out {
            *v = self.sample(rng);
        }
    }

    pub fn word(&self, rng: &mut Rng, len: usize) -> Vec<u8> {
        (0..len).map(|_| self.sample(rng)).collect()
    }
}
