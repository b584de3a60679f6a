//! Seedable, splittable random streams.
//!
//! Every stochastic routine takes an explicit generator. Independent streams
//! are derived from a root seed plus a label and an index, so results never
//! depend on scheduling or on how many workers ran the job.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Root of a family of independent generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for `(label, index)`. Distinct labels give unrelated keys,
    /// distinct indices give distinct ChaCha streams under the same key.
    pub fn stream(&self, label: &str, index: u64) -> SimRng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// A child tree, for handing a whole subsystem its own namespace.
    pub fn child(&self, label: &str) -> SeedTree {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(b"/child/");
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        SeedTree::new(u64::from_le_bytes(word))
    }
}
