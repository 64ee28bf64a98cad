//! Counter-based, splittable random streams.
//!
//! Every random draw in a simulation is addressed by a path of integers
//! (master seed, trial, block, ...). The path is hashed into a ChaCha key, so
//! any stream can be materialised independently of the order in which other
//! streams are consumed. This is what makes sweeps reproducible under any
//! thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Position in the stream tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitKey {
    words: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitKey {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        SplitKey {
            words: [
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
            ],
        }
    }

    /// Key drawn from the operating system's entropy source, for production
    /// use where reproducibility is not wanted.
    pub fn from_entropy() -> Self {
        let mut rng = rand::rng();
        SplitKey {
            words: [rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64()],
        }
    }

    /// Child key for `label`. Distinct labels give unrelated keys.
    pub fn child(&self, label: u64) -> Self {
        let mut out = [0u64; 4];
        let mut s = label ^ 0xD6E8_FEB8_6659_FD93;
        for (i, w) in self.words.iter().enumerate() {
            s ^= w.rotate_left(17 * i as u32 + 1);
            out[i] = splitmix64(&mut s);
        }
        SplitKey { words: out }
    }

    pub fn path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(*self, |k, &l| k.child(l))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_stream() {
        let a = SplitKey::new(7).path(&[3, 11]).rng().random::<u64>();
        let b = SplitKey::new(7).child(3).child(11).rng().random::<u64>();
        assert_eq!(a, b);
    }

    #[test]
    fn siblings_differ() {
        let k = SplitKey::new(7);
        assert_ne!(k.child(0), k.child(1));
        assert_ne!(k.child(0), SplitKey::new(8).child(0));
        assert_ne!(k.child(1).child(0), k.child(0).child(1));
    }
}
