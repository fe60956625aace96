//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream whose seed is a
//! pure function of the root seed and a path of tags and indices, e.g.
//! `(seed, "fading", drop)`. Work can then be split across threads in any
//! order and still replay exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        StreamKey(splitmix64(seed))
    }

    pub fn tag(self, tag: &str) -> Self {
        StreamKey(splitmix64(self.0 ^ fnv1a(tag.as_bytes())))
    }

    pub fn index(self, i: u64) -> Self {
        StreamKey(splitmix64(self.0.rotate_left(17) ^ splitmix64(i)))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn keys_are_pure_and_distinct() {
        let a = StreamKey::root(7).tag("fading").index(3);
        let b = StreamKey::root(7).tag("fading").index(3);
        assert_eq!(a, b);
        assert_ne!(a, StreamKey::root(7).tag("fading").index(4));
        assert_ne!(a, StreamKey::root(7).tag("positions").index(3));
        assert_ne!(a, StreamKey::root(8).tag("fading").index(3));
        let x: u64 = a.rng().random();
        let y: u64 = b.rng().random();
        assert_eq!(x, y);
    }
}
