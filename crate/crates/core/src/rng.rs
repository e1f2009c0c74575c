//! Counter-based random streams for reproducible parallel replicates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A reproducible random stream: ChaCha8 keyed by the master seed, with the
/// replicate index selecting the stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    pub seed: u64,
    pub id: u64,
}

impl Stream {
    pub fn new(seed: u64, id: u64) -> Self {
        Self { seed, id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id);
        rng
    }

    /// A stream for a different purpose under the same master seed.
    pub fn derive(seed: u64, purpose: u64) -> u64 {
        seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// Evaluates `f` for replicates `0..m` in parallel; results are in index order.
pub fn replicate<T, F>(m: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..m as u64).into_par_iter().map(f).collect()
}
