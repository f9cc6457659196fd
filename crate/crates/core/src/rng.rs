//! Deterministic, splittable random streams.
//!
//! Every simulated path owns a ChaCha8 stream keyed by the master seed and
//! selected by a 64-bit stream id. ChaCha is counter based, so the sequence a
//! path sees depends only on `(seed, stream id)` and never on which worker
//! thread happens to run it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed, an experiment id and a path index into a stream id.
pub fn mix(seed: u64, experiment: u64, index: u64) -> u64 {
    let a = splitmix64(seed ^ 0x6A09_E667_F3BC_C909);
    let b = splitmix64(a ^ experiment.rotate_left(17));
    splitmix64(b ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Stable experiment id from a short label.
pub fn experiment_id(label: &str) -> u64 {
    // FNV-1a, then finalized
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream for path `index` of experiment `experiment`.
    pub fn for_path(seed: u64, experiment: u64, index: u64) -> Self {
        Self::new(seed, mix(seed, experiment, index))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}
