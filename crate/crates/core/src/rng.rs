//! Seeded, platform-stable random streams.
//!
//! Every randomized operation in this workspace takes an [`RngHandle`]
//! identifying a `(master_seed, stream_id)` pair. The handle expands into a
//! ChaCha12 generator whose 256-bit seed is derived from the pair by
//! SplitMix64, so identical handles produce identical draw sequences on every
//! platform, and independent streams (one per trial, per substep) never share
//! state. Parallel experiments hand each trial its own substream instead of
//! sharing a generator.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngHandle {
    master_seed: u64,
    stream_id: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngHandle {
    /// Root handle of a run: stream 0 of the given master seed.
    pub fn new(master_seed: u64) -> Self {
        Self::stream(master_seed, 0)
    }

    pub fn stream(master_seed: u64, stream_id: u64) -> Self {
        RngHandle {
            master_seed,
            stream_id,
        }
    }

    /// Child stream `index` of this handle. Children of distinct indices and
    /// children of distinct parents are distinct streams.
    pub fn substream(&self, index: u64) -> Self {
        let mut s = self
            .stream_id
            .rotate_left(32)
            .wrapping_add(index.wrapping_mul(0xA24B_AED4_963E_E407));
        RngHandle {
            master_seed: self.master_seed,
            stream_id: splitmix64(&mut s),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut state = self
            .master_seed
            .wrapping_add(self.stream_id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn identical_handles_identical_draws() {
        let a = RngHandle::stream(7, 3);
        let b = RngHandle::stream(7, 3);
        let mut ra = a.rng();
        let mut rb = b.rng();
        for _ in 0..64 {
            assert_eq!(ra.next_u64(), rb.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let base = RngHandle::new(7);
        let mut r0 = base.substream(0).rng();
        let mut r1 = base.substream(1).rng();
        let d0: Vec<u64> = (0..8).map(|_| r0.next_u64()).collect();
        let d1: Vec<u64> = (0..8).map(|_| r1.next_u64()).collect();
        assert_ne!(d0, d1);
    }

    #[test]
    fn substream_tree_does_not_collide_with_siblings() {
        let base = RngHandle::new(42);
        let mut seen = std::collections::HashSet::new();
        for i in 0..100 {
            for j in 0..100 {
                assert!(seen.insert(base.substream(i).substream(j).stream_id()));
            }
        }
    }

    /// First draws of two fixed handles, frozen so that a silent change of
    /// the generator, the seed expansion, or the substream derivation cannot
    /// go unnoticed. Changing these breaks every recorded experiment seed.
    #[test]
    fn stream_is_stable_across_versions() {
        let mut r = RngHandle::new(1).rng();
        let first: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(
            first,
            vec![
                2309323588040300307,
                3594542182091012465,
                14306667832692370864,
                2763508954034591850,
            ]
        );
        let mut s = RngHandle::new(42).substream(7).rng();
        assert_eq!(s.next_u64(), 6417319657192177622);
        assert_eq!(s.next_u64(), 14118316477057509082);
    }
}
